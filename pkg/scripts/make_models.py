"""Regenerate the bundled benchmark networks under src/hyra/models/.

    python3 scripts/make_models.py

Every file is fully determined by the parameters below, so the output is
reproducible.  Free constants are listed in each file header.
"""

from __future__ import annotations

from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "hyra" / "models"

GEN_DURATION = 1000  # generator must run this long
REFUEL_DURATION = 10
REFUEL_RATE = 2  # linear refuel: fuel grows by 2 per time unit
SPARE = 5  # initial fuel margin


def automaton(name, *, vars=(), alphabet=(), modes=(), jumps=(), init=()):
    out = [f"  (automaton {name}"]
    if vars:
        out.append("    (vars " + " ".join(f"({v} {lo} {hi})" for v, lo, hi in vars) + ")")
    if alphabet:
        out.append("    (alphabet " + " ".join(alphabet) + ")")
    for m in modes:
        out.append(f"    {m}")
    for j in jumps:
        out.append(f"    {j}")
    for i in init:
        out.append(f"    {i}")
    out[-1] += ")"
    return "\n".join(out)


def mode(name, flow=None, inv=None):
    s = f"(mode {name}"
    if flow:
        s += f" (flow {flow})"
    if inv:
        s += f" (inv {inv})"
    return s + ")"


def jump(src, dst, labels=(), guard=None, update=None):
    s = f"(jump {src} {dst}"
    if labels:
        s += " (labels " + " ".join(labels) + ")"
    if guard:
        s += f" (guard {guard})"
    if update:
        s += f" (update {update})"
    return s + ")"


def document(name, header, automata, goal, k, max_delay, delta=0.1):
    lines = [f"; {line}" if line else ";" for line in header]
    lines.append(f"(network {name}")
    lines.append("\n".join(automata) + ")")
    lines.append(goal)
    lines.append(f"(defaults (k {k}) (max-delay {max_delay}) (delta {delta}))")
    return "\n".join(lines) + "\n"


def clock_flow(pairs):
    """Closed-form linear flow: var@t = var@0 + rate * t."""
    parts = []
    for v, rate in pairs:
        rhs = "t" if rate == 1 else f"(* {rate} t)"
        parts.append(f"(= {v}@t (+ {v}@0 {rhs}))")
    return "(closed-form (and " + " ".join(parts) + "))"


# ---------------------------------------------------------------- generator

def lock_two_step(actions):
    modes = [mode("free")] + [mode(f"h_{a}") for a in actions]
    jumps = []
    labels = []
    for a in actions:
        jumps.append(jump("free", f"h_{a}", [f"acq_{a}"]))
        jumps.append(jump(f"h_{a}", "free", [f"rel_{a}"]))
        labels += [f"acq_{a}", f"rel_{a}"]
    return automaton("lock", alphabet=labels, modes=modes, jumps=jumps, init=["(init free)"])


def lock_one_step(actions):
    jumps = [jump("l", "l", [a]) for a in actions]
    return automaton("lock", alphabet=list(actions), modes=[mode("l")], jumps=jumps, init=["(init l)"])


def generator(n: int, nonlinear: bool = False, lock: int = 2) -> str:
    if nonlinear:
        per_refuel = 0.1 * REFUEL_DURATION ** 3 / 3  # integral of 0.1 * c^2 over [0, 10]
        added_hi = 40
    else:
        per_refuel = REFUEL_RATE * REFUEL_DURATION
        added_hi = 2 * per_refuel
    fuel0 = GEN_DURATION - n * int(per_refuel) + SPARE
    added = [f"added{r}" for r in range(1, n + 1)]
    fuel_expr = f"(+ {fuel0} " + " ".join(added) + ")" if added else f"{fuel0}"
    inv = f"(>= (- {fuel_expr} used) 0)"
    gvars = [("gclock", 0, 2 * GEN_DURATION), ("used", 0, 2 * GEN_DURATION)]
    gvars += [(a, 0, added_hi) for a in added]
    run_flow = clock_flow([("gclock", 1), ("used", 1)])
    autos = []
    end_guard = f"(= gclock {GEN_DURATION})"
    if lock == 2:
        gl = ["acq_gs", "rel_gs", "acq_ge", "rel_ge"]
        autos.append(automaton(
            "gen", vars=gvars, alphabet=gl,
            modes=[mode("idle"), mode("s_lock", run_flow, inv), mode("running", run_flow, inv),
                   mode("e_lock"), mode("done")],
            jumps=[jump("idle", "s_lock", ["acq_gs"]), jump("s_lock", "running", ["rel_gs"]),
                   jump("running", "e_lock", ["acq_ge"], end_guard), jump("e_lock", "done", ["rel_ge"])],
            init=["(init idle (and (= gclock 0) (= used 0)))"]))
    else:
        gl = ["gs", "ge"]
        autos.append(automaton(
            "gen", vars=gvars, alphabet=gl,
            modes=[mode("idle"), mode("running", run_flow, inv), mode("done")],
            jumps=[jump("idle", "running", ["gs"]), jump("running", "done", ["ge"], end_guard)],
            init=["(init idle (and (= gclock 0) (= used 0)))"]))
    actions = ["gs", "ge"]
    for r in range(1, n + 1):
        c, a = f"rclock{r}", f"added{r}"
        if nonlinear:
            flow = f"(ode (d/dt {c} 1) (d/dt {a} (* 0.1 (* {c} {c}))))"
        else:
            flow = clock_flow([(c, 1), (a, REFUEL_RATE)])
        rinv = f"(<= {c} {REFUEL_DURATION})"
        rguard = f"(= {c} {REFUEL_DURATION})"
        rv = [(c, 0, 2 * REFUEL_DURATION), (a, 0, added_hi)]
        if lock == 2:
            rl = [f"acq_rs{r}", f"rel_rs{r}", f"acq_re{r}", f"rel_re{r}"]
            autos.append(automaton(
                f"refuel{r}", vars=rv, alphabet=rl,
                modes=[mode("idle"), mode("s_lock", flow, rinv), mode("active", flow, rinv),
                       mode("e_lock"), mode("done")],
                jumps=[jump("idle", "s_lock", [rl[0]]), jump("s_lock", "active", [rl[1]]),
                       jump("active", "e_lock", [rl[2]], rguard), jump("e_lock", "done", [rl[3]])],
                init=[f"(init idle (and (= {c} 0) (= {a} 0)))"]))
        else:
            rl = [f"rs{r}", f"re{r}"]
            autos.append(automaton(
                f"refuel{r}", vars=rv, alphabet=rl,
                modes=[mode("idle"), mode("active", flow, rinv), mode("done")],
                jumps=[jump("idle", "active", [rl[0]]), jump("active", "done", [rl[1]], rguard)],
                init=[f"(init idle (and (= {c} 0) (= {a} 0)))"]))
        actions += [f"rs{r}", f"re{r}"]
    if lock == 2:
        autos.append(lock_two_step(actions))
        goal_modes = ["(gen e_lock)"] + [f"(refuel{r} done)" for r in range(1, n + 1)]
        k = 3 + 4 * n
    else:
        autos.append(lock_one_step(actions))
        goal_modes = ["(gen done)"] + [f"(refuel{r} done)" for r in range(1, n + 1)]
        k = 2 + 2 * n
    kind = "nonlinear" if nonlinear else "linear"
    rate = "0.1 * rclock^2 (ODE)" if nonlinear else f"{REFUEL_RATE} (closed form)"
    header = [
        f"Generator, {kind} refuel, {n} refuel tank(s), {'two' if lock == 2 else 'one'}-step lock.",
        f"The generator must run for {GEN_DURATION} time units and burns one unit of fuel",
        f"per time unit.  Each refuel lasts {REFUEL_DURATION} time units at rate {rate}.",
        f"Constants: initial fuel {fuel0},",
        f"variable bounds as declared, no tank capacity.  Minimum step bound k = {k}.",
    ]
    suffix = "" if lock == 2 else "_lock1"
    return document(f"generator_{kind}_{n}{suffix}", header, autos,
                    "(goal (modes " + " ".join(goal_modes) + "))", k, GEN_DURATION)


# ---------------------------------------------------------------- car

def car(i: int, nonlinear: bool = False, lock: int = 1) -> str:
    if nonlinear:
        flow = "(ode (d/dt x v) (d/dt v (- a (* 0.1 (* v v)))))"
    else:
        flow = "(closed-form (and (= x@t (+ x@0 (+ (* v@0 t) (* 0.5 (* a@0 (* t t)))))) (= v@t (+ v@0 (* a@0 t)))))"
    acts = [f"acc{j}" for j in range(1, i + 1)] + [f"dec{j}" for j in range(1, i + 1)]
    ev = [("x", 0, 100), ("v", 0, 50), ("a", -2 * i, 2 * i)]
    autos = []
    if lock == 1:
        ej = [jump("off", "on", ["start"]),
              jump("on", "off", ["stop"], "(and (= v 0) (= a 0))")]
        ej += [jump("on", "on", [a]) for a in acts]
        autos.append(automaton(
            "engine", vars=ev, alphabet=["start", "stop"] + acts,
            modes=[mode("off"), mode("on", flow, "(>= v 0)")],
            jumps=ej, init=["(init off (and (= x 0) (and (= v 0) (= a 0))))"]))
        for j in range(1, i + 1):
            for kind, sign in (("acc", "+"), ("dec", "-")):
                autos.append(automaton(
                    f"{kind}{j}", vars=[("a", -2 * i, 2 * i)], alphabet=[f"{kind}{j}"],
                    modes=[mode("ready")],
                    jumps=[jump("ready", "ready", [f"{kind}{j}"], None, f"(= a' ({sign} a {j}))")],
                    init=["(init ready)"]))
        autos.append(lock_one_step(["start", "stop"] + acts))
        k = 6 if i == 1 else 5
    else:
        all_acts = ["start", "stop"] + acts
        labels = {a: (f"acq_{a}", f"rel_{a}") for a in all_acts}
        ej = [jump("off", "on", [labels["start"][0]]),
              jump("on", "off", [labels["stop"][0]], "(and (= v 0) (= a 0))")]
        ej += [jump("on", "on", [labels[a][0]]) for a in acts]
        autos.append(automaton(
            "engine", vars=ev, alphabet=[labels["start"][0], labels["stop"][0]] + [labels[a][0] for a in acts],
            modes=[mode("off"), mode("on", flow, "(>= v 0)")],
            jumps=ej, init=["(init off (and (= x 0) (and (= v 0) (= a 0))))"]))
        for j in range(1, i + 1):
            for kind, sign in (("acc", "+"), ("dec", "-")):
                a = f"{kind}{j}"
                autos.append(automaton(
                    a, vars=[("a", -2 * i, 2 * i)], alphabet=list(labels[a]),
                    modes=[mode("ready"), mode("busy")],
                    jumps=[jump("ready", "busy", [labels[a][0]], None, f"(= a' ({sign} a {j}))"),
                           jump("busy", "ready", [labels[a][1]])],
                    init=["(init ready)"]))
        autos.append(lock_two_step(all_acts))
        k = 12 if i == 1 else 10
    kind = "nonlinear" if nonlinear else "linear"
    header = [
        f"Car, {kind} kinematics, accelerate/decelerate by 1..{i}, {'one' if lock == 1 else 'two'}-step lock.",
        "The car starts at rest with the engine off and must end at rest, engine off, x >= 30.",
        "Constants: distance 30, bounds as",
        "declared, drag coefficient 0.1 in the nonlinear variant.",
    ]
    suffix = "" if lock == 1 else "_lock2"
    return document(f"car_{kind}_{i}{suffix}", header, autos,
                    "(goal (modes (engine off)) (pred (>= x 30)))", k, 10)


# ---------------------------------------------------------------- dribble

DRIBBLE_FORCES = (4, 2, 1, 0)


def dribble(lock: int = 2) -> str:
    ode = "(ode (d/dt x v) (d/dt v (- (- 0 9.8) (* 0.1 (* v v)))))"
    ball_inv = "(>= x 0)"
    bv = [("x", 0, 10), ("v", -20, 20)]
    autos = []
    if lock == 2:
        ld, lb = ("acq_drib", "rel_drib"), ("acq_bounce", "rel_bounce")
        autos.append(automaton(
            "ball", vars=bv, alphabet=[ld[0], lb[0]],
            modes=[mode("up", ode, ball_inv), mode("down", ode, ball_inv)],
            jumps=[jump("up", "down", [ld[0]]), jump("down", "up", [lb[0]])],
            init=["(init up (and (= x 1) (= v 0)))"]))
        autos.append(automaton(
            "dribble", vars=bv, alphabet=list(ld),
            modes=[mode("idle"), mode("busy")],
            jumps=[jump("idle", "busy", [ld[0]], "(= v 0)", f"(= v' (- v {f}))") for f in DRIBBLE_FORCES]
            + [jump("busy", "idle", [ld[1]])],
            init=["(init idle)"]))
        autos.append(automaton(
            "bounce", vars=bv, alphabet=list(lb),
            modes=[mode("idle"), mode("busy")],
            jumps=[jump("idle", "busy", [lb[0]], "(= x 0)", "(= v' (* (- 0 0.9) v))"),
                   jump("busy", "idle", [lb[1]])],
            init=["(init idle)"]))
        autos.append(automaton(
            "lock", alphabet=[ld[0], ld[1], lb[0], lb[1]],
            modes=[mode("free"), mode("h_drib"), mode("h_bounce")],
            jumps=[jump("free", "h_drib", [ld[0]]), jump("h_drib", "free", [ld[1]]),
                   jump("free", "h_bounce", [lb[0]]), jump("h_bounce", "free", [lb[1]])],
            init=["(init free)"]))
        k = 8
    else:
        autos.append(automaton(
            "ball", vars=bv, alphabet=["drib", "bounce"],
            modes=[mode("up", ode, ball_inv), mode("down", ode, ball_inv)],
            jumps=[jump("up", "down", ["drib"]), jump("down", "up", ["bounce"])],
            init=["(init up (and (= x 1) (= v 0)))"]))
        autos.append(automaton(
            "dribble", vars=bv, alphabet=["drib"], modes=[mode("ready")],
            jumps=[jump("ready", "ready", ["drib"], "(= v 0)", f"(= v' (- v {f}))") for f in DRIBBLE_FORCES],
            init=["(init ready)"]))
        autos.append(automaton(
            "bounce", vars=bv, alphabet=["bounce"], modes=[mode("ready")],
            jumps=[jump("ready", "ready", ["bounce"], "(= x 0)", "(= v' (* (- 0 0.9) v))")],
            init=["(init ready)"]))
        autos.append(lock_one_step(["drib", "bounce"]))
        k = 4
    header = [
        f"Dribble, gravity 9.8 with drag 0.1 v^2, bounce v' = -0.9 v, {'two' if lock == 2 else 'one'}-step lock.",
        "A dribble happens at the top of a bounce (v = 0) and pushes the ball down.",
        "Constants: dribble impulses",
        f"{', '.join(map(str, DRIBBLE_FORCES))}, height bound 10, speed bound 20, start at x = 1.",
        f"Goal 1.5 <= x <= 3.0.  With this lock, k = {k} means {k // (4 if lock == 2 else 2)} dribble actions.",
    ]
    suffix = "" if lock == 2 else "_lock1"
    return document(f"dribble{suffix}", header, autos,
                    "(goal (pred (and (>= x 1.5) (<= x 3.0))))", k, 10)


# ---------------------------------------------------------------- toy

TOY = """; Two automata that must jump together on label s.
(network toy
  (automaton A
    (vars (x 0 10))
    (alphabet s)
    (mode a0 (flow (closed-form (= x@t (+ x@0 t)))) (inv (<= x 5)))
    (mode a1)
    (jump a0 a1 (labels s) (guard (>= x 1)))
    (init a0 (= x 0)))
  (automaton B
    (alphabet s)
    (mode b0)
    (mode b1)
    (jump b0 b1 (labels s))
    (init b0)))
(goal (modes (A a1) (B b1)))
(defaults (k 1) (max-delay 10) (delta 0.1))
"""

TOY_UNSAT = """; Like toy, but B has no way to reach b1.
(network toy_unsat
  (automaton A
    (vars (x 0 10))
    (alphabet s)
    (mode a0 (flow (closed-form (= x@t (+ x@0 t)))) (inv (<= x 5)))
    (mode a1)
    (jump a0 a1 (labels s) (guard (>= x 1)))
    (init a0 (= x 0)))
  (automaton B
    (alphabet s)
    (mode b0)
    (mode b1)
    (jump b0 b0 (labels s))
    (init b0)))
(goal (modes (A a1) (B b1)))
(defaults (k 1) (max-delay 10) (delta 0.1))
"""


def all_models() -> dict:
    out = {"toy.hna": TOY, "toy_unsat.hna": TOY_UNSAT}
    for n in range(4):
        out[f"generator_linear_{n}.hna"] = generator(n)
        out[f"generator_linear_{n}_lock1.hna"] = generator(n, lock=1)
    for n in range(1, 3):
        out[f"generator_nonlinear_{n}.hna"] = generator(n, nonlinear=True)
    for i in range(1, 4):
        out[f"car_linear_{i}.hna"] = car(i)
        out[f"car_linear_{i}_lock2.hna"] = car(i, lock=2)
    out["car_nonlinear_1.hna"] = car(1, nonlinear=True)
    out["dribble.hna"] = dribble()
    out["dribble_lock1.hna"] = dribble(lock=1)
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, text in all_models().items():
        (OUT / name).write_text(text, encoding="utf-8")
        print("wrote", OUT / name)


if __name__ == "__main__":
    main()
