"""Planning the Sussman anomaly on a sign network, one regression step at a time.

    python3 demos/sign_planning.py

Shows what the M-step selects for the goal, how the A-step ranks the grounded
actions, one P-step, then the full plan before and after the agent has
reinforced its personal meanings with it.
"""

from srtplan.signworld import a_step, build_sign_network, fixture_text, m_step, map_plan, p_step, parse_pddl


def show(situation):
    return " ".join("(" + " ".join(lit) + ")" for lit in sorted(situation))


def main():
    task = parse_pddl(fixture_text("blocksworld-domain.pddl"), fixture_text("sussman.pddl"))
    net = build_sign_network(task)
    print("start:", show(net.start))
    print("goal: ", show(net.goal))
    print(f"{len(net.signs)} signs, {len(net.procedural_signs())} of them procedural")

    picks = m_step(net, net.goal)
    print("\nM-step picks", ", ".join(f"{s.name}{dict(b)}" for s, b in picks))
    ranked = a_step(net, picks, net.goal)
    print("A-step ranks", ", ".join(map(str, ranked)))
    print("P-step through", ranked[0], "leaves", show(p_step(ranked[0], net.goal)))

    plan = map_plan(net, net.start, net.goal)
    print(f"\nplan of {len(plan)} steps:")
    print(plan.to_text(), end="")

    net.reinforce(plan)
    again = a_step(net, m_step(net, net.goal), net.goal)
    print("\nafter reinforcement the A-step prefers", again[0])


if __name__ == "__main__":
    main()
