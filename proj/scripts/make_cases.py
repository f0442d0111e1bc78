#!/usr/bin/env python3
"""Regenerates the bundled case files in data/.

- case5.json / case5_limits.json: the 5-bus test system, converted from the
  published branch impedances to series admittances in p.u. A small quadratic
  cost term is added to every generator because the solver requires strictly
  convex generation costs (the published costs are linear).
- case118.m / case300.m: synthetic large cases. The partition boundary
  (tie lines between regions) is structurally faithful; the interior of each
  region is a generated mesh with plausible impedances, loads, and
  generation. Intended for smoke testing only.

Deterministic: rerunning reproduces the checked-in files byte for byte.
"""

import json
import os

OUT = os.path.join(os.path.dirname(__file__), os.pardir, "data")


def series_gb(r, x):
    z2 = r * r + x * x
    return r / z2, -x / z2


def make_case5(with_limits):
    buses = [
        {"id": 1, "v_min": 0.9, "v_max": 1.1, "p_demand": 0.0, "q_demand": 0.0,
         "is_reference": False},
        {"id": 2, "v_min": 0.9, "v_max": 1.1, "p_demand": 3.0, "q_demand": 0.9861,
         "is_reference": False},
        {"id": 3, "v_min": 0.9, "v_max": 1.1, "p_demand": 3.0, "q_demand": 0.9861,
         "is_reference": False},
        {"id": 4, "v_min": 0.9, "v_max": 1.1, "p_demand": 4.0, "q_demand": 1.3147,
         "is_reference": True},
        {"id": 5, "v_min": 0.9, "v_max": 1.1, "p_demand": 0.0, "q_demand": 0.0,
         "is_reference": False},
    ]
    # (bus, p_max, q_range, linear cost $/MWh); c1 = 0.01 $/MW^2h added
    gen_data = [
        (1, 0.40, 0.30, 14.0),
        (1, 1.70, 1.275, 15.0),
        (3, 5.20, 3.90, 30.0),
        (4, 2.00, 1.50, 40.0),
        (5, 6.00, 4.50, 10.0),
    ]
    gens = []
    for bus, pmax, qr, lin in gen_data:
        gens.append({"bus_id": bus, "p_min": 0.0, "p_max": pmax,
                     "q_min": -qr, "q_max": qr,
                     "c1": 0.01 * 100.0 ** 2, "c2": lin * 100.0, "c3": 0.0})
    branch_data = [
        (1, 2, 0.00281, 0.0281, 2.4 if with_limits else None),
        (1, 4, 0.00304, 0.0304, None),
        (1, 5, 0.00064, 0.0064, None),
        (2, 3, 0.00108, 0.0108, None),
        (3, 4, 0.00297, 0.0297, None),
        (4, 5, 0.00297, 0.0297, 1.8 if with_limits else None),
    ]
    branches = []
    for f, t, r, x, lim in branch_data:
        g, b = series_gb(r, x)
        br = {"from_bus": f, "to_bus": t, "g": g, "b": b}
        if lim is not None:
            br["apparent_limit"] = lim
        branches.append(br)
    return {
        "schema_version": 1,
        "name": "case5lim" if with_limits else "case5",
        "base_mva": 100.0,
        "buses": buses,
        "generators": gens,
        "branches": branches,
    }


def lcg(seed):
    state = seed

    def nxt():
        nonlocal state
        state = (state * 6364136223846793005 + 1442695040888963407) % (1 << 64)
        return (state >> 33) / float(1 << 31)

    return nxt


def synth_case(name, regions, ties, ref_bus):
    """regions: list of bus-id lists; ties: list of (from, to) across regions."""
    rng = lcg(12345)
    lines = [f"function mpc = {name}", "mpc.version = '2';", "mpc.baseMVA = 100;"]

    all_buses = [b for reg in regions for b in reg]
    loads = {}
    for b in sorted(all_buses):
        pd = round(6.0 + 14.0 * rng(), 1)
        qd = round(pd * (0.2 + 0.2 * rng()), 1)
        loads[b] = (pd, qd)

    gens = []
    for reg in regions:
        reg_sorted = sorted(reg)
        total_load = sum(loads[b][0] for b in reg)
        picks = reg_sorted[:: max(1, len(reg_sorted) // 5)][:6]
        cap = 2.5 * total_load / len(picks)
        for b in picks:
            gens.append((b, round(cap, 1)))
            loads[b] = (0.0, 0.0)
    gen_buses = {b for b, _ in gens}

    lines.append("mpc.bus = [")
    for b in sorted(all_buses):
        btype = 3 if b == ref_bus else (2 if b in gen_buses else 1)
        pd, qd = loads[b]
        lines.append(f"\t{b}\t{btype}\t{pd}\t{qd}\t0\t0\t1\t1\t0\t115\t1\t1.06\t0.94;")
    lines.append("];")

    lines.append("mpc.gen = [")
    for b, cap in gens:
        qcap = round(0.6 * cap, 1)
        lines.append(f"\t{b}\t0\t0\t{qcap}\t{-qcap}\t1\t100\t1\t{cap}\t0;")
    lines.append("];")

    branches = []
    for reg in regions:
        reg_sorted = sorted(reg)
        for a, b in zip(reg_sorted, reg_sorted[1:]):  # chain
            branches.append((a, b))
        n = len(reg_sorted)
        if n > 4:
            branches.append((reg_sorted[0], reg_sorted[-1]))  # close the ring
        for k in range(3, n - 1, 5):  # chords
            branches.append((reg_sorted[k], reg_sorted[(k + n // 2) % n]))
    branches.extend(ties)

    lines.append("mpc.branch = [")
    for f, t in branches:
        x = round(0.05 + 0.10 * rng(), 4)
        r = round(x / 4.0, 4)
        lines.append(f"\t{f}\t{t}\t{r}\t{x}\t0\t0\t0\t0\t0\t0\t1;")
    lines.append("];")

    lines.append("mpc.gencost = [")
    for b, cap in gens:
        c2 = round(0.01 + 0.03 * rng(), 4)
        c1 = round(15.0 + 25.0 * rng(), 2)
        lines.append(f"\t2\t0\t0\t3\t{c2}\t{c1}\t0;")
    lines.append("];")
    return "\n".join(lines) + "\n"


def case118():
    r1 = list(range(1, 33)) + [113, 114, 115, 117]
    r2 = list(range(33, 68))
    r3 = list(range(68, 82)) + [116, 118]
    r4 = list(range(82, 113))
    ties = [(15, 33), (19, 34), (30, 38), (24, 70), (24, 72), (47, 69), (49, 69),
            (65, 68), (77, 82), (80, 96), (80, 97), (80, 98), (80, 99)]
    return synth_case("case118", [r1, r2, r3, r4], ties, ref_bus=69)


def case300():
    r1 = list(range(1, 101))
    r2 = list(range(101, 201))
    r3 = list(range(201, 301))
    ties = []
    for k in range(13):  # region 1 - region 2
        ties.append((3 + 7 * k, 101 + ((11 * k) % 100)))
    for k in range(16):  # region 1 - region 3
        ties.append((2 + 6 * k, 201 + ((13 * k) % 100)))
    seen = set()
    k = 0
    while len([t for t in ties if t[0] > 100]) < 32:  # region 2 - region 3
        t = (102 + ((9 * k) % 99), 203 + ((17 * k) % 97))
        if t not in seen:
            seen.add(t)
            ties.append(t)
        k += 1
    return synth_case("case300", [r1, r2, r3], ties, ref_bus=1)


def main():
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "case5.json"), "w") as f:
        json.dump(make_case5(False), f, indent=2)
        f.write("\n")
    with open(os.path.join(OUT, "case5_limits.json"), "w") as f:
        json.dump(make_case5(True), f, indent=2)
        f.write("\n")
    with open(os.path.join(OUT, "case118.m"), "w") as f:
        f.write(case118())
    with open(os.path.join(OUT, "case300.m"), "w") as f:
        f.write(case300())


if __name__ == "__main__":
    main()
