"""Regenerate the bundled case files deterministically.

Run from this directory: python3 generate.py
"""
import json

PHI = 0.6180339887498949


def frac(x):
    return x - int(x)


def segments(p_max, base, fixed):
    """Three convex pieces meeting at p_max/3 and 2*p_max/3."""
    slopes = [base, round(base * 1.15, 4), round(base * 1.35, 4)]
    segs = [{"slope": slopes[0], "intercept": fixed}]
    for k in (1, 2):
        bp = p_max * k / 3.0
        prev = segs[-1]
        icpt = prev["slope"] * bp + prev["intercept"] - slopes[k] * bp
        segs.append({"slope": slopes[k], "intercept": round(icpt, 6)})
    return segs


def aggregate_forecasts(case, loads, pv, wind):
    nb = case["network"]["bus_count"]
    wsum = sum(l["weight"] for l in case["network"]["loads"])
    cap = {"pv": 0.0, "wind": 0.0}
    for r in case["renewables"]:
        cap[r["kind"]] += r["capacity"]
    out = {"load": [], "renewable": []}
    for ld, p, w in zip(loads, pv, wind):
        row = [0.0] * nb
        for l in case["network"]["loads"]:
            row[l["bus"] - 1] += round(ld * l["weight"] / wsum, 6)
        out["load"].append(row)
        ren = []
        for r in case["renewables"]:
            tot = p if r["kind"] == "pv" else w
            ren.append(round(min(tot * r["capacity"] / cap[r["kind"]], r["capacity"]), 6))
        out["renewable"].append(ren)
    return out


def ieee118():
    nb = 118
    lines = []
    seen = set()

    def add(f, t, k):
        key = (min(f, t), max(f, t))
        if f == t or key in seen:
            return False
        seen.add(key)
        x = round(0.02 + 0.18 * frac((k + 1) * PHI), 4)
        lines.append({"from": f, "to": t, "reactance": x, "capacity": 600.0})
        return True

    for i in range(1, nb):
        add(i, i + 1, len(lines))
    add(nb, 1, len(lines))
    k = 0
    while len(lines) < 186:
        f = 1 + (k * 118 // 68) % nb
        s = 7 + (k * 13) % 23
        t = 1 + (f - 1 + s) % nb
        add(f, t, len(lines))
        k += 1

    groups = [
        ([10, 12, 25, 26], 0.05, 2.0),
        ([31, 46, 49, 54], 0.1, 3.0),
        ([59, 61, 65, 66], 0.2, 4.0),
        ([69, 80, 87, 89], 0.25, 5.0),
        ([100, 103, 111], 0.4, 10.0),
    ]
    pmax = {10: 550, 12: 185, 25: 320, 26: 414, 31: 107, 46: 119, 49: 304, 54: 148, 59: 255, 61: 260,
            65: 491, 66: 492, 69: 805, 80: 577, 87: 104, 89: 707, 100: 352, 103: 140, 111: 136}
    gens = []
    j = 0
    for buses, ramp, mil in groups:
        for b in buses:
            base = round(18.0 + 14.0 * frac((j + 1) * PHI), 2)
            gens.append({
                "id": f"g{b}", "bus": b, "p_min": round(0.1 * pmax[b], 1), "p_max": float(pmax[b]),
                "ramp": ramp, "cost_segments": segments(pmax[b], base, round(100 + 5 * j, 1)),
                "mileage_cost": mil,
            })
            j += 1
    gen_buses = {g["bus"] for g in gens}
    loads = [{"bus": b, "weight": round(0.5 + frac(b * PHI), 4)} for b in range(1, nb + 1) if b not in gen_buses]

    esses = []
    for b, pcap, ecap, soc in [(4, 10.0, 5.0, 0.1), (9, 20.0, 10.0, 0.5), (39, 10.0, 5.0, 0.9), (67, 20.0, 10.0, 0.5)]:
        esses.append({
            "id": f"s{b}", "bus": b, "p_cap": pcap, "energy_cap": ecap, "ramp": 4.0, "eta_d": 0.95, "eta_c": 0.95,
            "degradation_cost": 200.0, "mileage_cost": 10.0, "soc_init": soc, "soc_min": 0.1, "soc_max": 0.9,
        })
    ren = [
        {"id": "w1", "bus": 1, "kind": "wind", "capacity": 400.0},
        {"id": "w44", "bus": 44, "kind": "wind", "capacity": 300.0},
        {"id": "w68", "bus": 68, "kind": "wind", "capacity": 300.0},
        {"id": "pv38", "bus": 38, "kind": "pv", "capacity": 330.0},
    ]
    case = {
        "name": "ieee118_reg",
        "notes": [
            "Published values: generator buses, ramp and mileage_cost per group; every ESS field except eta_d/eta_c; renewable buses and capacities.",
            "Repository defaults: line topology/reactances/capacities (synthetic meshed 118-bus graph, 186 lines), generator p_min/p_max and cost_segments, eta_d = eta_c = 0.95, load weights, forecasts.",
            "Buses are 1-based. Positive line flow runs from `from` to `to`. Slack bus 69.",
        ],
        "network": {"bus_count": nb, "slack_bus": 69, "mva_base": 100.0, "lines": lines, "loads": loads},
        "generators": gens,
        "esses": esses,
        "renewables": ren,
    }
    case["forecasts"] = aggregate_forecasts(case, [3600, 3620, 3645, 3660, 3670, 3690], [200, 205, 210, 212, 215, 218], [480, 470, 475, 490, 500, 495])
    return case


def reduced10():
    nb = 10
    lines = []
    for i in range(1, nb):
        lines.append((i, i + 1))
    lines += [(10, 1), (1, 4), (3, 7), (5, 9), (2, 8)]
    lines = [{"from": f, "to": t, "reactance": round(0.05 + 0.15 * frac((k + 1) * PHI), 4), "capacity": 250.0}
             for k, (f, t) in enumerate(lines)]
    spec = [
        ("g1", 1, 40.0, 260.0, 0.05, 2.0, 20.0),
        ("g2", 3, 30.0, 220.0, 0.1, 3.0, 22.0),
        ("g3", 5, 20.0, 180.0, 0.2, 4.0, 25.0),
        ("g4", 7, 15.0, 150.0, 0.25, 5.0, 28.0),
        ("g5", 9, 10.0, 120.0, 0.4, 10.0, 32.0),
    ]
    gens = [{"id": i, "bus": b, "p_min": lo, "p_max": hi, "ramp": rr, "cost_segments": segments(hi, c, 80.0),
             "mileage_cost": mil} for (i, b, lo, hi, rr, mil, c) in spec]
    esses = [
        {"id": "s4", "bus": 4, "p_cap": 10.0, "energy_cap": 5.0, "ramp": 4.0, "eta_d": 0.95, "eta_c": 0.95,
         "degradation_cost": 200.0, "mileage_cost": 10.0, "soc_init": 0.5, "soc_min": 0.1, "soc_max": 0.9},
        {"id": "s8", "bus": 8, "p_cap": 20.0, "energy_cap": 10.0, "ramp": 4.0, "eta_d": 0.95, "eta_c": 0.95,
         "degradation_cost": 200.0, "mileage_cost": 10.0, "soc_init": 0.5, "soc_min": 0.1, "soc_max": 0.9},
    ]
    ren = [
        {"id": "w2", "bus": 2, "kind": "wind", "capacity": 150.0},
        {"id": "pv6", "bus": 6, "kind": "pv", "capacity": 80.0},
    ]
    loads = [{"bus": b, "weight": w} for b, w in [(2, 1.0), (4, 1.5), (6, 1.0), (8, 2.0), (10, 1.5), (3, 0.5), (7, 0.5)]]
    case = {
        "name": "reduced10",
        "notes": [
            "Desk-scale 10-bus system for fast rolling simulations. All values are repository defaults;",
            "generator ramp and mileage_cost tiers and ESS parameters mirror the 118-bus case.",
            "Buses are 1-based. Positive line flow runs from `from` to `to`. Slack bus 1.",
        ],
        "network": {"bus_count": nb, "slack_bus": 1, "mva_base": 100.0, "lines": lines, "loads": loads},
        "generators": gens,
        "esses": esses,
        "renewables": ren,
    }
    case["forecasts"] = aggregate_forecasts(case, [520, 528, 535, 540, 548, 552], [40, 42, 44, 45, 46, 46], [70, 68, 72, 75, 74, 76])
    return case


for name, case in [("ieee118_reg", ieee118()), ("reduced10", reduced10())]:
    with open(f"{name}.json", "w") as fh:
        json.dump(case, fh, indent=2)
        fh.write("\n")
