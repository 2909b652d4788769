"""Grid path planning that can recover from a blocked goal.

Layers, bottom-up: ``grid_model`` (worlds and occupancy grids), ``search``
(A* and jump point search), ``blockage`` (finding the obstacle that cuts the
goal off), ``signworld`` (symbolic planning over a sign network), ``srt_loop``
(the loop tying them together) and ``bench`` (blockage benchmarks, rendering).
"""

__version__ = "0.1.0"
