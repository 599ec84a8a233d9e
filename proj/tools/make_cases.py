#!/usr/bin/env python3
"""Regenerate the bundled case files and synthetic profiles under data/.

Usage: make_cases.py <case33bw.m> <case85.m> <outdir>

The feeder data come from the MATPOWER distribution files. The profiles are
smooth synthetic curves (clear-sky PV, three load classes) at 15-minute
resolution over one day.
"""
import json
import math
import re
import sys


def read_matrix(text, name):
    m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S)
    rows = []
    for line in m.group(1).splitlines():
        line = line.split("%")[0].strip().rstrip(";")
        if line:
            rows.append([float(t) for t in line.split()])
    return rows


def hourly(points, h):
    i = int(math.floor(h)) % 24
    j = (i + 1) % 24
    w = h - math.floor(h)
    return points[i] * (1 - w) + points[j] * w


LOAD_SHAPES = {
    "residential": [0.45, 0.40, 0.38, 0.37, 0.38, 0.45, 0.60, 0.62, 0.55, 0.45,
                    0.38, 0.35, 0.35, 0.36, 0.40, 0.48, 0.62, 0.78, 0.88, 0.90,
                    0.85, 0.75, 0.62, 0.52],
    "commercial": [0.30, 0.28, 0.27, 0.27, 0.28, 0.32, 0.42, 0.55, 0.68, 0.75,
                   0.78, 0.78, 0.74, 0.76, 0.78, 0.75, 0.70, 0.62, 0.55, 0.48,
                   0.42, 0.38, 0.34, 0.32],
    "industrial": [0.50, 0.50, 0.50, 0.50, 0.52, 0.55, 0.62, 0.68, 0.70, 0.70,
                   0.70, 0.68, 0.66, 0.70, 0.70, 0.68, 0.65, 0.60, 0.56, 0.54,
                   0.52, 0.50, 0.50, 0.50],
}


def pv_fraction(h):
    sunrise, sunset = 5.75, 20.25
    if h <= sunrise or h >= sunset:
        return 0.0
    s = math.sin(math.pi * (h - sunrise) / (sunset - sunrise))
    return min(1.0, 1.15 * s ** 1.2)


def write_case(path, case):
    with open(path, "w") as fh:
        json.dump(case, fh, indent=1)
        fh.write("\n")


def write_profiles(path, case):
    buses = [b for b in case["buses"] if b["id"] != 0]
    header = ["time"] + ["bus:%d" % b["id"] for b in buses] + \
             ["ibdg:%s" % g["name"] for g in case["ibdgs"]]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(96):
            h = k / 4.0
            row = ["%02d:%02d" % (k // 4, 15 * (k % 4))]
            for b in buses:
                row.append("%.4f" % hourly(LOAD_SHAPES[b.get("class", "residential")], h))
            for g in case["ibdgs"]:
                row.append("%.4f" % pv_fraction(h))
            fh.write(",".join(row) + "\n")


def downstream(lines, n, values):
    parent = {l["to"]: l["from"] for l in lines}
    acc = [0.0] * n
    for bus in range(1, n):
        k = bus
        while k != 0:
            acc[k] += values[bus]
            k = parent[k]
    return acc


def ibdg(name, bus, kw, dispatchable=True):
    return {"name": name, "bus": bus, "dispatchable": dispatchable,
            "p_max_kw": kw, "q_min_kvar": -0.5 * kw, "q_max_kvar": 0.5 * kw,
            "s_max_kva": round(1.1 * kw, 6), "mu_min": 0.9, "availability": name}


def finish(case, lines, loads_p, loads_q, n, ampacity, cap_factor=1.1):
    dp = downstream(lines, n, loads_p)
    dq = downstream(lines, n, loads_q)
    for l in lines:
        l["ampacity_a"] = ampacity(l["to"])
        l["p_max_kw"] = round(cap_factor * dp[l["to"]], 4)
        l["q_max_kvar"] = round(cap_factor * dq[l["to"]], 4)
    case["lines"] = lines


def make34(path33):
    text = open(path33).read()
    bus = read_matrix(text, "bus")
    br = read_matrix(text, "branch")
    n = 34
    loads_p = [0.0] * n
    loads_q = [0.0] * n
    for row in bus:
        k = int(row[0])
        loads_p[k] = row[2]
        loads_q[k] = row[3]
    commercial = {7, 8, 14, 24, 25}
    industrial = {29, 30, 31}
    buses = [{"id": 0}]
    for k in range(1, n):
        cls = "commercial" if k in commercial else "industrial" if k in industrial else "residential"
        buses.append({"id": k, "load_kw": loads_p[k], "load_kvar": loads_q[k], "class": cls})
    zb = 12.66 ** 2 / 1.0
    lines = [{"from": 0, "to": 1, "r_ohm": round(0.0005 * zb, 6), "x_ohm": round(0.003 * zb, 6)}]
    for row in br:
        if int(row[10]) == 0:
            continue
        lines.append({"from": int(row[0]), "to": int(row[1]), "r_ohm": row[2], "x_ohm": row[3]})
    case = {
        "schema_version": 1,
        "name": "ieee34",
        "description": "Baran-Wu 33-bus feeder behind a substation transformer (bus 0 is the upstream grid)",
        "bases": {"v_kv": 12.66, "s_mva": 1.0},
        "slack_v0": 1.0,
        "design_epsilon": 1.5,
        "profiles": "profiles_ieee34.csv",
        "defaults": {"v_min": 0.90, "v_max": 1.05, "v_target": 1.0, "v_threshold": 0.1},
        "buses": buses,
        "ibdgs": [ibdg("pv18", 18, 1000), ibdg("pv33", 33, 1000), ibdg("pv25", 25, 450),
                  ibdg("pv22", 22, 300), ibdg("pv14", 14, 400), ibdg("pv30", 30, 350),
                  ibdg("pv9", 9, 200), ibdg("pv28", 28, 250),
                  ibdg("pv6", 6, 100, False), ibdg("pv12", 12, 100, False),
                  ibdg("pv24", 24, 100, False)],
    }
    finish(case, lines, loads_p, loads_q, n, lambda to: 400.0 if to <= 5 else 200.0)
    return case


def make85(path85):
    text = open(path85).read()
    bus = read_matrix(text, "bus")
    br = read_matrix(text, "branch")
    n = 85
    loads_p = [0.0] * n
    loads_q = [0.0] * n
    for row in bus:
        k = int(row[0]) - 1
        loads_p[k] = row[2]
        loads_q[k] = row[3]
    buses = [{"id": 0}]
    commercial = set(range(6, 12)) | set(range(30, 36))
    for k in range(1, n):
        cls = "commercial" if k in commercial else "residential"
        buses.append({"id": k, "load_kw": loads_p[k], "load_kvar": loads_q[k], "class": cls})
    lines = []
    for row in br:
        lines.append({"from": int(row[0]) - 1, "to": int(row[1]) - 1, "r_ohm": row[2], "x_ohm": row[3]})
    case = {
        "schema_version": 1,
        "name": "ieee85",
        "description": "Das-Kothari-Kalam 85-bus radial feeder, substation as slack",
        "bases": {"v_kv": 11.0, "s_mva": 1.0},
        "slack_v0": 1.0,
        "design_epsilon": 1.5,
        "profiles": "profiles_ieee85.csv",
        "defaults": {"v_min": 0.90, "v_max": 1.05, "v_target": 1.0, "v_threshold": 0.1},
        "buses": buses,
        "ibdgs": [],
    }
    for name, b, kw, disp in PV85:
        case["ibdgs"].append(ibdg(name, b, kw, disp))
    finish(case, lines, loads_p, loads_q, n, lambda to: 300.0 if to <= 8 else 150.0,
           cap_factor=0.9)
    return case


PV85 = [("pv53", 53, 550, True), ("pv46", 46, 450, True), ("pv50", 50, 300, True),
        ("pv21", 21, 300, True), ("pv70", 70, 350, True), ("pv84", 84, 300, True),
        ("pv12", 12, 80, False), ("pv42", 42, 80, False)]


def main():
    out = sys.argv[3]
    c34 = make34(sys.argv[1])
    write_profiles(out + "/profiles_ieee34.csv", c34)
    write_case(out + "/ieee34.json", c34)
    c85 = make85(sys.argv[2])
    write_profiles(out + "/profiles_ieee85.csv", c85)
    write_case(out + "/ieee85.json", c85)


if __name__ == "__main__":
    main()
