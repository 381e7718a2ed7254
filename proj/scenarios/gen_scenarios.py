#!/usr/bin/env python3
"""Regenerates the bundled scenario files. Run from the scenarios/ directory."""
import json

COMMON_RADIO = {
    "n_prb": 25,
    "prb_bandwidth_hz": 180000.0,
    "tx_power_dbm": 43.0,
    "pathloss_exponent": 3.76,
    "ref_loss_db": 128.1,
    "ref_distance_m": 1000.0,
    "shadowing_std_db": 3.0,
    "noise_figure_db": 7.0,
    "min_spectral_efficiency": 0.15,
    "max_spectral_efficiency": 7.4,
    "mcs_bins": 8,
}
TIMESCALE = {"delta_meas_s": 0.05, "n_meas_per_control": 20}
HANDOVER = {"hysteresis_db": 3.0, "ttt_ms": 110.0, "ho_interruption_instants": 1,
            "pingpong_window_instants": 20}
CBR1M = {"name": "cbr1m", "type": "cbr", "rate_bps": 1000000.0}


def box(kind, xmin, xmax, ymin, ymax, n, profile="cbr1m", speed=1.5):
    return {"type": kind, "xmin": xmin, "xmax": xmax, "ymin": ymin, "ymax": ymax,
            "ue_count": n, "profile": profile, "speed_mps": speed}


def bench3():
    # Three cells in a line. The red box loads cells 1-2; the green box sits
    # on the 2-3 border where UEs can be steered toward the idle cell 3.
    return {
        "name": "bench3",
        "graph": {
            "cells": [{"id": 1, "x": 0, "y": 0}, {"id": 2, "x": 500, "y": 0},
                      {"id": 3, "x": 1000, "y": 0}],
            "edges": [[1, 2], [2, 3]],
        },
        "radio": COMMON_RADIO,
        "timescale": TIMESCALE,
        "handover": HANDOVER,
        "traffic": {"profiles": [CBR1M]},
        "mobility": {"boxes": [
            box("red", -150, 650, -150, 150, 16),
            box("green", 620, 840, -110, 110, 8),
        ]},
        "episode": {"epochs": 50},
    }


def bench8(test_variant=False):
    cells = []
    for i in range(4):
        cells.append({"id": i + 1, "x": i * 500, "y": 0})
    for i in range(4):
        cells.append({"id": i + 5, "x": i * 500, "y": 500})
    edges = [[1, 2], [2, 3], [3, 4], [5, 6], [6, 7], [7, 8], [2, 6], [3, 7]]
    if not test_variant:
        boxes = [
            box("red", 350, 1150, -100, 600, 20),
            box("green", 150, 350, -100, 100, 12),
            box("green", 1150, 1350, 400, 600, 12),
        ]
    else:
        boxes = [
            box("red", 100, 900, -100, 600, 16),
            box("green", 1150, 1350, -100, 100, 14),
            box("green", 400, 600, 200, 400, 10),
        ]
    return {
        "name": "bench8_test" if test_variant else "bench8",
        "graph": {"cells": cells, "edges": edges},
        "radio": COMMON_RADIO,
        "timescale": TIMESCALE,
        "handover": HANDOVER,
        "traffic": {"profiles": [CBR1M]},
        "mobility": {"boxes": boxes},
        "episode": {"epochs": 50},
    }


def grid30():
    # 5x6 grid plus 15 diagonals: 30 cells, 64 edges, average degree ~4.27.
    # A synthetic stand-in at the scale of a dense urban cluster; cells group
    # into 10 three-cell sites for site-level region decomposition.
    cells = []
    for r in range(5):
        for c in range(6):
            cid = r * 6 + c + 1
            cells.append({"id": cid, "x": c * 400, "y": r * 400, "site": (cid - 1) // 3})
    edges = []
    for r in range(5):
        for c in range(6):
            cid = r * 6 + c + 1
            if c + 1 < 6:
                edges.append([cid, cid + 1])
            if r + 1 < 5:
                edges.append([cid, cid + 6])
    diagonals = 0
    for r in range(4):
        for c in range(5):
            if diagonals >= 15:
                break
            cid = r * 6 + c + 1
            edges.append([cid, cid + 7])
            diagonals += 1
    profiles = [CBR1M,
                {"name": "web", "type": "onoff", "rate_bps": 750000.0,
                 "mean_on_s": 3.0, "mean_off_s": 5.0}]
    boxes = [
        box("red", 200, 1800, 200, 1400, 30),
        box("green", 700, 900, -100, 100, 10),
        box("green", 1500, 1700, 1300, 1500, 10, "web"),
    ]
    return {
        "name": "grid30",
        "graph": {"cells": cells, "edges": edges},
        "radio": COMMON_RADIO,
        "timescale": TIMESCALE,
        "handover": HANDOVER,
        "traffic": {"profiles": profiles},
        "mobility": {"boxes": boxes},
        "episode": {"epochs": 20},
    }


if __name__ == "__main__":
    for name, sc in [("bench3", bench3()), ("bench8", bench8()),
                     ("bench8_test", bench8(True)), ("grid30", grid30())]:
        with open(f"{name}.json", "w") as f:
            json.dump(sc, f, indent=2)
            f.write("\n")
        print(f"wrote {name}.json")
