#!/usr/bin/env python3
"""Write data/ieee39.json from the standard 39-bus network and machine tables.

Network data is the 100 MVA MATPOWER case39; machine data is the classic
two-axis set on the same base. Subtransient reactances are not part of those
tables and are set to 0.75 X'd on both axes.
"""
import json
import sys

S_BASE = 100.0

LOADS = {
    1: (97.6, 44.2), 3: (322.0, 2.4), 4: (500.0, 184.0), 7: (233.8, 84.0), 8: (522.0, 176.6),
    9: (6.5, -66.6), 12: (8.53, 88.0), 15: (320.0, 153.0), 16: (329.0, 32.3), 18: (158.0, 30.0),
    20: (680.0, 103.0), 21: (274.0, 115.0), 23: (247.5, 84.6), 24: (308.6, -92.2), 25: (224.0, 47.2),
    26: (139.0, 17.0), 27: (281.0, 75.5), 28: (206.0, 27.6), 29: (283.5, 26.9), 31: (9.2, 4.6),
    39: (1104.0, 250.0),
}

# from, to, r, x, b, ratio
BRANCHES = [
    (1, 2, 0.0035, 0.0411, 0.6987, 0), (1, 39, 0.001, 0.025, 0.75, 0), (2, 3, 0.0013, 0.0151, 0.2572, 0),
    (2, 25, 0.007, 0.0086, 0.146, 0), (2, 30, 0.0, 0.0181, 0.0, 1.025), (3, 4, 0.0013, 0.0213, 0.2214, 0),
    (3, 18, 0.0011, 0.0133, 0.2138, 0), (4, 5, 0.0008, 0.0128, 0.1342, 0), (4, 14, 0.0008, 0.0129, 0.1382, 0),
    (5, 6, 0.0002, 0.0026, 0.0434, 0), (5, 8, 0.0008, 0.0112, 0.1476, 0), (6, 7, 0.0006, 0.0092, 0.113, 0),
    (6, 11, 0.0007, 0.0082, 0.1389, 0), (6, 31, 0.0, 0.025, 0.0, 1.07), (7, 8, 0.0004, 0.0046, 0.078, 0),
    (8, 9, 0.0023, 0.0363, 0.3804, 0), (9, 39, 0.001, 0.025, 1.2, 0), (10, 11, 0.0004, 0.0043, 0.0729, 0),
    (10, 13, 0.0004, 0.0043, 0.0729, 0), (10, 32, 0.0, 0.02, 0.0, 1.07), (12, 11, 0.0016, 0.0435, 0.0, 1.006),
    (12, 13, 0.0016, 0.0435, 0.0, 1.006), (13, 14, 0.0009, 0.0101, 0.1723, 0), (14, 15, 0.0018, 0.0217, 0.366, 0),
    (15, 16, 0.0009, 0.0094, 0.171, 0), (16, 17, 0.0007, 0.0089, 0.1342, 0), (16, 19, 0.0016, 0.0195, 0.304, 0),
    (16, 21, 0.0008, 0.0135, 0.2548, 0), (16, 24, 0.0003, 0.0059, 0.068, 0), (17, 18, 0.0007, 0.0082, 0.1319, 0),
    (17, 27, 0.0013, 0.0173, 0.3216, 0), (19, 20, 0.0007, 0.0138, 0.0, 1.06), (19, 33, 0.0007, 0.0142, 0.0, 1.07),
    (20, 34, 0.0009, 0.018, 0.0, 1.009), (21, 22, 0.0008, 0.014, 0.2565, 0), (22, 23, 0.0006, 0.0096, 0.1846, 0),
    (22, 35, 0.0, 0.0143, 0.0, 1.025), (23, 24, 0.0022, 0.035, 0.361, 0), (23, 36, 0.0005, 0.0272, 0.0, 1.0),
    (25, 26, 0.0032, 0.0323, 0.531, 0), (25, 37, 0.0006, 0.0232, 0.0, 1.025), (26, 27, 0.0014, 0.0147, 0.2396, 0),
    (26, 28, 0.0043, 0.0474, 0.7802, 0), (26, 29, 0.0057, 0.0625, 1.029, 0), (28, 29, 0.0014, 0.0151, 0.249, 0),
    (29, 38, 0.0008, 0.0156, 0.0, 1.025),
]

# name, bus, P (MW), V set, H, Xd, Xq, X'd, X'q, T'd0, T'q0
MACHINES = [
    ("G1", 39, 1000.0, 1.03, 500.0, 0.02, 0.019, 0.006, 0.008, 7.0, 0.7),
    ("G2", 31, 520.81, 0.982, 30.3, 0.295, 0.282, 0.0697, 0.170, 6.56, 1.5),
    ("G3", 32, 650.0, 0.9831, 35.8, 0.2495, 0.237, 0.0531, 0.0876, 5.7, 1.5),
    ("G4", 33, 632.0, 0.9972, 28.6, 0.262, 0.258, 0.0436, 0.166, 5.69, 1.5),
    ("G5", 34, 508.0, 1.0123, 26.0, 0.67, 0.62, 0.132, 0.166, 5.4, 0.44),
    ("G6", 35, 650.0, 1.0493, 34.8, 0.254, 0.241, 0.05, 0.0814, 7.3, 0.4),
    ("G7", 36, 560.0, 1.0635, 26.4, 0.295, 0.292, 0.049, 0.186, 5.66, 1.5),
    ("G8", 37, 540.0, 1.0278, 24.3, 0.290, 0.280, 0.057, 0.0911, 6.7, 0.41),
    ("G9", 38, 830.0, 1.0265, 34.5, 0.2106, 0.205, 0.057, 0.0587, 4.79, 1.96),
    # No q-axis transient winding: X'q = Xq.
    ("G10", 30, 250.0, 1.0475, 42.0, 0.1, 0.069, 0.031, 0.069, 10.2, 1.0),
]

AVR = {"TA_TB": 0.25, "TB": 10.0, "K": 100.0, "TE": 0.05, "Efd_min": -5.0, "Efd_max": 5.0}
PSS = {"K": 2.0, "Tw": 10.0, "T1": 0.15, "T2": 0.05, "Vmax": 0.1}
GOVERNOR = {"R": 0.005, "Tg": 0.5}
# Lower transient gain on the exciters of G8 and G9.
AVR_OVERRIDES = {name: dict(AVR, TA_TB=0.16) for name in ("G8", "G9")}


def build(s_base=S_BASE, pss=None, avr=None, avr_overrides=None):
    k = s_base / S_BASE
    case = {
        "name": "ieee39",
        "s_base": s_base,
        "f_base": 60.0,
        "buses": [{"name": str(i), "base_kv": 345.0} for i in range(1, 40)],
        "branches": [],
        "loads": [],
        "machines": [],
        "tcscs": [{"name": "TCSC1", "branch": "L26-29", "x_ref": 0.1, "T": 0.16, "min": 0.01, "max": 0.5}],
        "slack": {"bus": "31", "v": 0.982, "angle_deg": 0.0},
    }
    for f, t, r, x, b, ratio in BRANCHES:
        prefix = "T" if ratio else "L"
        br = {"name": f"{prefix}{f}-{t}", "from": str(f), "to": str(t), "r": r * k, "x": x * k, "b": b / k}
        if ratio:
            br["ratio"] = ratio
        case["branches"].append(br)
    for bus, (p, q) in sorted(LOADS.items()):
        case["loads"].append({"bus": str(bus), "p": p / s_base, "q": q / s_base})
    for name, bus, p, v, h, xd, xq, xdt, xqt, td0, tq0 in MACHINES:
        xst = 0.75 * xdt
        m = {
            "name": name,
            "bus": str(bus),
            "p": p / s_base,
            "v": v,
            "params": {
                "H": h / k, "D": 0.0,
                "Xd": xd * k, "Xq": xq * k, "Xd_t": xdt * k, "Xq_t": xqt * k,
                "Xd_st": xst * k, "Xq_st": xst * k,
                "Td0_t": td0, "Tq0_t": tq0, "Td0_st": 0.03, "Tq0_st": 0.05,
            },
        }
        if name != "G1":
            m["avr"] = dict((avr_overrides or AVR_OVERRIDES).get(name, avr or AVR))
            m["pss"] = dict(pss or PSS)
            gov = dict(GOVERNOR)
            gov["R"] = GOVERNOR["R"] * k
            m["governor"] = gov
        case["machines"].append(m)
    return case


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "data/ieee39.json"
    with open(out, "w") as fh:
        json.dump(build(), fh, indent=1)
        fh.write("\n")
