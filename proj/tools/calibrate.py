#!/usr/bin/env python3
"""Calibrate the latency profile so a 16-peer, 16-broker network saturates
inside a target band of offered load.

The knob is the per-byte cost of orderer -> peer links. Block delivery from
orderer 0 to every endorsing peer is the byte-heaviest fan-out in the
pipeline, so its cost sets where throughput stops tracking offered load.
Propagation delay (base_us) shifts latency but not that point, which is why it
is not bisected here.

The saturation point of a profile is the highest offered rate on the probe grid
whose throughput stays within 5% of offered. Higher per-byte cost can only lower
it, so bisection applies.

Usage:
    tools/calibrate.py --eovsim build/tools/eovsim [--write]
"""

import argparse
import copy
import json
import os
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)
DEFAULT_PROFILE = os.path.join(ROOT, "profiles", "calibrated.json")


def with_per_byte(profile, per_byte):
    out = copy.deepcopy(profile)
    links = out.setdefault("network", {}).setdefault("links", [])
    for link in links:
        if link.get("from") == "orderer" and link.get("to") == "peer":
            link["per_byte_us"] = per_byte
            return out
    links.append({"from": "orderer", "to": "peer", "per_byte_us": per_byte})
    return out


def run_cell(binary, profile, rate, args, workdir):
    cfg = copy.deepcopy(profile)
    cfg["topology"] = {"endorsing_peers": 16, "clients": 16, "orderers": 4, "brokers": 16}
    cfg["rate"] = {"total_tps": rate}
    cfg["duration_s"] = args.duration
    cfg["seed"] = args.seed
    path = os.path.join(workdir, "cell.json")
    with open(path, "w") as f:
        json.dump(cfg, f)
    out = os.path.join(workdir, "out")
    subprocess.run([binary, "run", "--config", path, "--out", out],
                   check=True, stdout=subprocess.DEVNULL)
    with open(os.path.join(out, "report.json")) as f:
        return json.load(f)["throughput_tps"]


def saturation_point(binary, profile, args, workdir):
    last_ok = None
    for rate in range(args.grid_lo, args.grid_hi + 1, args.grid_step):
        tput = run_cell(binary, profile, rate, args, workdir)
        if tput < 0.95 * rate:
            break
        last_ok = rate
    return last_ok


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--eovsim", default=os.path.join(ROOT, "build", "tools", "eovsim"),
                   help="path to the eovsim binary")
    p.add_argument("--profile", default=DEFAULT_PROFILE)
    p.add_argument("--band", type=float, nargs=2, default=(250.0, 400.0),
                   metavar=("LO", "HI"), help="accepted saturation band, tps")
    p.add_argument("--target", type=float, default=325.0,
                   help="saturation point to aim for inside the band")
    p.add_argument("--bracket", type=float, nargs=2, default=(0.001, 0.05),
                   metavar=("LO", "HI"), help="per-byte search interval, us/byte")
    p.add_argument("--grid-lo", type=int, default=150)
    p.add_argument("--grid-hi", type=int, default=500)
    p.add_argument("--grid-step", type=int, default=25)
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--iterations", type=int, default=12)
    p.add_argument("--write", action="store_true",
                   help="store the chosen value back into the profile")
    args = p.parse_args()

    with open(args.profile) as f:
        profile = json.load(f)

    lo, hi = args.bracket
    best = None
    with tempfile.TemporaryDirectory() as workdir:
        for it in range(args.iterations):
            mid = round((lo + hi) / 2, 5)
            sat = saturation_point(args.eovsim, with_per_byte(profile, mid), args, workdir)
            shown = "below grid" if sat is None else f"{sat} tps"
            print(f"[{it}] per_byte_us={mid:.5f} saturates at {shown}", flush=True)
            if sat is not None and args.band[0] <= sat <= args.band[1]:
                if best is None or abs(sat - args.target) < abs(best[1] - args.target):
                    best = (mid, sat)
                if abs(sat - args.target) <= args.grid_step / 2:
                    break
            # Costlier bytes saturate earlier.
            if sat is None or sat < args.target:
                hi = mid
            else:
                lo = mid

    if best is None:
        print("no value in the bracket saturates inside the band", file=sys.stderr)
        return 1
    per_byte, sat = best
    print(json.dumps({"orderer_peer_per_byte_us": per_byte, "saturation_tps": sat}))
    if args.write:
        with open(args.profile, "w") as f:
            json.dump(with_per_byte(profile, per_byte), f, indent=2)
            f.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
