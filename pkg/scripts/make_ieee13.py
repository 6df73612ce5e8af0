"""Generate the bundled modified IEEE 13-node feeder, agents and scenarios.

Starts from the published IEEE 13-node test feeder (overhead/underground
configurations in ohm/mile, spot loads in kW/kvar) and applies the study
modifications:

* nodes renumbered 1..13 breadth-first from the source bus
  (650->1, 632->2, 633->3, 634->4, 645->5, 646->6, 671->7, 692->8,
  675->9, 684->10, 611->11, 652->12, 680->13);
* the voltage regulator is dropped and the 633-634 transformer is replaced
  by an equivalent-impedance line segment; all line lengths are scaled to
  30% (no tap machinery in the formulation, so the feeder is shortened to
  keep voltages near a flat 1.0 pu source and losses low);
* the 632-671 distributed load is lumped at node 7; the secondary-side
  634 load keeps its phase-b portion at node 4 and re-homes phases a/c to
  the main load bus 9 (the 480 V level is not modeled);
* loads in the switchable 7..13 subtree are power-factor-corrected to 0.995
  (q = 0.1 p) so island operation is limited by active capacity rather
  than reactive headroom; per-phase totals match the published feeder
  (a 1175, b 1039, c 1252 kW, 3466 kW overall);
* explicit per-phase ampacities and current limits sized not to bind;
* three-phase prosumers at nodes 3 and 13 (650 kVA inverter per phase,
  645 kW active export limit) priced at $35/MWh and $20/MWh, one
  feeder-bound consumer per load node.
"""

import json
from pathlib import Path

MI = 5280.0
LENGTH_SCALE = 0.3

# ohm per mile, rows/cols ordered a,b,c
CONFIGS = {
    601: (
        [[0.3465, 0.1560, 0.1580], [0.1560, 0.3375, 0.1535], [0.1580, 0.1535, 0.3414]],
        [[1.0179, 0.5017, 0.4236], [0.5017, 1.0478, 0.3849], [0.4236, 0.3849, 1.0348]],
        ("a", "b", "c"),
    ),
    602: (
        [[0.7526, 0.1580, 0.1560], [0.1580, 0.7475, 0.1535], [0.1560, 0.1535, 0.7436]],
        [[1.1814, 0.4236, 0.5017], [0.4236, 1.1983, 0.3849], [0.5017, 0.3849, 1.2112]],
        ("a", "b", "c"),
    ),
    603: (
        [[0, 0, 0], [0, 1.3294, 0.2066], [0, 0.2066, 1.3238]],
        [[0, 0, 0], [0, 1.3471, 0.4591], [0, 0.4591, 1.3569]],
        ("b", "c"),
    ),
    604: (
        [[1.3238, 0, 0.2066], [0, 0, 0], [0.2066, 0, 1.3294]],
        [[1.3569, 0, 0.4591], [0, 0, 0], [0.4591, 0, 1.3471]],
        ("a", "c"),
    ),
    605: (
        [[0, 0, 0], [0, 0, 0], [0, 0, 1.3292]],
        [[0, 0, 0], [0, 0, 0], [0, 0, 1.3475]],
        ("c",),
    ),
    606: (
        [[0.7982, 0.3192, 0.2849], [0.3192, 0.7891, 0.3192], [0.2849, 0.3192, 0.7982]],
        [[0.4463, 0.0328, -0.0143], [0.0328, 0.4041, 0.0328], [-0.0143, 0.0328, 0.4463]],
        ("a", "b", "c"),
    ),
    607: (
        [[1.3425, 0, 0], [0, 0, 0], [0, 0, 0]],
        [[0.5124, 0, 0], [0, 0, 0], [0, 0, 0]],
        ("a",),
    ),
}

# from, to, length ft, config, per-phase ampacity kVA
SEGMENTS = [
    (1, 2, 2000, 601, 3000.0),
    (2, 3, 500, 602, 2000.0),
    (2, 5, 500, 603, 1500.0),
    (2, 7, 2000, 601, 3000.0),
    (5, 6, 300, 603, 1500.0),
    (7, 8, 10, 601, 2500.0),
    (7, 10, 300, 604, 1500.0),
    (7, 13, 1000, 601, 2000.0),
    (8, 9, 500, 606, 2000.0),
    (10, 11, 300, 605, 1000.0),
    (10, 12, 800, 607, 1000.0),
]

# 633-634 transformer stand-in: 500 kVA, Z = 1.1 + j2 percent on its own
# rating -> 0.022 + j0.04 pu on the 1000 kVA per-phase base
XFMR_OHM = ((4.16e3) ** 2 / (3.0 * 1000e3))  # z base, ohm
XFMR_R = 0.022 * XFMR_OHM
XFMR_X = 0.040 * XFMR_OHM

LOADS = {
    4: {"b": (120, 90)},
    5: {"b": (170, 125)},
    6: {"b": (230, 132)},
    7: {"a": (402, 40.2), "b": (451, 45.1), "c": (502, 50.2)},
    8: {"c": (170, 17.0)},
    9: {"a": (645, 64.5), "b": (68, 6.8), "c": (410, 41.0)},
    11: {"c": (170, 17.0)},
    12: {"a": (128, 12.8)},
}


def scaled(mat, feet):
    factor = feet * LENGTH_SCALE / MI
    return [[round(v * factor, 9) for v in row] for row in mat]


def build_feeder():
    lines = []
    for f, t, feet, cfg, slim in SEGMENTS:
        r, x, phases = CONFIGS[cfg]
        lines.append(
            {
                "from": f,
                "to": t,
                "R": scaled(r, feet),
                "X": scaled(x, feet),
                "s_limit": slim,
                "i_max": 600.0,
                "i_min": 0.0,
                "phases": list(phases),
            }
        )
    diag = lambda v: [[v if i == j else 0.0 for j in range(3)] for i in range(3)]
    lines.append(
        {
            "from": 3,
            "to": 4,
            "R": diag(round(XFMR_R, 9)),
            "X": diag(round(XFMR_X, 9)),
            "s_limit": 700.0,
            "i_max": 600.0,
            "i_min": 0.0,
            "phases": ["a", "b", "c"],
        }
    )
    lines.sort(key=lambda ln: (ln["from"], ln["to"]))
    nodes = []
    for nid in range(1, 14):
        entry = {"id": nid}
        if nid in LOADS:
            entry["loads"] = {
                ph: {"p": float(p), "q": float(q)} for ph, (p, q) in sorted(LOADS[nid].items())
            }
        nodes.append(entry)
    return {
        "name": "modified IEEE 13-node feeder",
        "base_kva": 1000.0,
        "base_kv": 4.16,
        "v_min": 0.95,
        "v_max": 1.05,
        "substation": 1,
        "nodes": nodes,
        "lines": lines,
    }


def build_agents():
    consumers = []
    for nid, loads in sorted(LOADS.items()):
        consumers.append(
            {
                "id": f"load{nid}",
                "node": nid,
                "phases": sorted(loads.keys()),
                "utility_usd_per_mwh": 0.0,
                "demand_source": "feeder",
            }
        )
    return {
        "prosumers": [
            {
                "id": "pv3",
                "node": 3,
                "phases": ["a", "b", "c"],
                "p_min_kw": 0.0,
                "p_max_kw": 645.0,
                "q_min_kvar": -200.0,
                "q_max_kvar": 200.0,
                "s_inv_kva": 650.0,
                "offer_usd_per_mwh": 35.0,
            },
            {
                "id": "pv13",
                "node": 13,
                "phases": ["a", "b", "c"],
                "p_min_kw": 0.0,
                "p_max_kw": 645.0,
                "q_min_kvar": -200.0,
                "q_max_kvar": 200.0,
                "s_inv_kva": 650.0,
                "offer_usd_per_mwh": 20.0,
            },
        ],
        "consumers": consumers,
    }


SCENARIOS = {
    "ieee13_pre": [],
    "ieee13_coord_attack": [
        {"kind": "price_tamper", "target": "pv13", "param": 45.0},
        {"kind": "demand_inflation", "target": "load7", "param": 1.25},
    ],
    "ieee13_lineout": [{"kind": "line_outage", "target": "2-7", "param": None}],
}


def main():
    data_dir = Path(__file__).resolve().parents[1] / "src" / "peergrid" / "data"
    scen_dir = data_dir / "scenarios"
    scen_dir.mkdir(parents=True, exist_ok=True)

    feeder = build_feeder()
    agents = build_agents()
    (data_dir / "ieee13_mod.json").write_text(json.dumps(feeder, indent=2) + "\n")
    (data_dir / "agents_ieee13.json").write_text(json.dumps(agents, indent=2) + "\n")

    for name, attacks in SCENARIOS.items():
        scenario = {
            "name": name,
            "feeder": "../ieee13_mod.json",
            "agents": "../agents_ieee13.json",
            "horizon": 1,
            "voll_usd_per_mwh": 2000.0,
            "substation_usd_per_mwh": 50.0,
            "attacks": attacks,
        }
        (scen_dir / f"{name}.json").write_text(json.dumps(scenario, indent=2) + "\n")
    print(f"wrote feeder + agents + {len(SCENARIOS)} scenarios under {data_dir}")


if __name__ == "__main__":
    main()
