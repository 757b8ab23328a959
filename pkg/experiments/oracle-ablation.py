# Trains two agents on the crossing phantom with identical seeds, one with the
# oracle reward bonus and oracle stopping and one without, and compares the
# invalid and missing connections of their tractograms.

import logging
import sys
from dataclasses import replace
from time import time

from tractoracle.env import EnvConfig
from tractoracle.evaluator import format_report, report
from tractoracle.oracle import OracleConfig, train_oracle
from tractoracle.phantom import (
    demo_phantom_spec,
    generate_phantom,
    synthesize_labeled_set,
)
from tractoracle.sac import SacConfig, train
from tractoracle.tracker import track_policy


def main(seed=0):
    v = generate_phantom(demo_phantom_spec("crossing"), rng_seed=seed)

    t_start = time()
    data = synthesize_labeled_set(v, n_pos=500, n_neg=500, rng_seed=seed + 1)
    oracle, _ = train_oracle(data, OracleConfig(n_points=32, ffn_dim=128),
            epochs=20, rng_seed=seed + 2)
    print(f"trained oracle in {time() - t_start:.1f} s")

    sac_cfg = SacConfig(epochs=150, hidden_dim=128, n_layers=2, batch_size=64,
            n_seeds_per_epoch=8, buffer_capacity=50_000, rng_seed=seed + 3)
    with_oracle = EnvConfig(max_steps=120, n_previous_directions=4,
            alpha=10., oracle_stop=True)
    without_oracle = replace(with_oracle, alpha=0., oracle_stop=False)

    results = {}
    for name, env_cfg in [("oracle", with_oracle), ("no oracle", without_oracle)]:
        t_start = time()
        agent, _ = train(v, oracle, env_cfg, sac_cfg)
        t = track_policy(agent, oracle, v, per_voxel_seeds=2, env_cfg=env_cfg,
                rng_seed=seed + 4)
        results[name] = report(t, v)
        print(f"{name} ({time() - t_start:.1f} s):")
        print(format_report(results[name]))

    def false_pct(r):
        return r.ic_pct + r.nc_pct

    print(f"IC+NC: oracle {false_pct(results['oracle']):.2f}%, "
            f"no oracle {false_pct(results['no oracle']):.2f}%")
    return false_pct(results["oracle"]) < false_pct(results["no oracle"])


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    ok = main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
    print("PASS" if ok else "FAIL")
    sys.exit(0 if ok else 1)
