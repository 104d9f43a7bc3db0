"""Mean true fidelity_max across the grid versus realignment period.

No tomography: the state after the link is scored directly, so the numbers
isolate the effect of uncorrected birefringence drift.

    python scripts/drift_study.py --drift-step 0.05 --seeds 0-49
"""
import argparse
import dataclasses

import numpy as np

from wdment.channel_grid import build_plan
from wdment.cli import parse_channels
from wdment.config import load_config
from wdment.link import apply_link
from wdment.qstate import fidelity_max_phase
from wdment.source import emit_state
from wdment.sweep import drift_paths, measurement_interval, residual_drift


def mean_fidelity(cfg) -> float:
    plan = build_plan(cfg.grid)
    paths = drift_paths(cfg, measurement_interval(len(plan), cfg))
    return float(np.mean([
        fidelity_max_phase(apply_link(emit_state(ch, cfg.source), ch, cfg.link,
                                      drift=residual_drift(cfg, ch.index, paths)))[0]
        for ch in plan
    ]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="paper")
    ap.add_argument("--drift-step", type=float, default=None)
    ap.add_argument("--seeds", default="0-19")
    ap.add_argument("--periods", default="0,1,2,4,8,16")
    args = ap.parse_args()

    base = load_config(args.config)
    if args.drift_step is not None:
        base = dataclasses.replace(base, link=dataclasses.replace(base.link, drift_step=args.drift_step))
    print("realign_every,mean_fidelity_max,std")
    for every in (int(x) for x in args.periods.split(",")):
        vals = []
        for seed in parse_channels(args.seeds):
            cfg = dataclasses.replace(
                base,
                link=dataclasses.replace(base.link, seed=seed),
                schedule=dataclasses.replace(base.schedule, realign_every=every),
            )
            vals.append(mean_fidelity(cfg))
        print(f"{every},{np.mean(vals):.6f},{np.std(vals):.6f}")


if __name__ == "__main__":
    main()
