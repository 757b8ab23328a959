# Trains an agent on the straight-tube phantom and compares episode returns
# and valid connections before and after training.

import logging
import sys
from time import time

import numpy as np

from tractoracle.env import EnvConfig
from tractoracle.evaluator import format_report, report
from tractoracle.phantom import demo_phantom_spec, generate_phantom
from tractoracle.sac import SacAgent, SacConfig, train
from tractoracle.tracker import track_policy


MIN_RETURN_GAIN = 0.5
MIN_VC_GAIN = 30.


def evaluate(agent, v, env_cfg, seed):
    t = track_policy(agent, None, v, per_voxel_seeds=2, env_cfg=env_cfg,
            rng_seed=seed)
    return report(t, v)


def main(seed=0):
    v = generate_phantom(demo_phantom_spec("straight-tube"), rng_seed=seed)
    env_cfg = EnvConfig(max_steps=120, n_previous_directions=4)
    sac_cfg = SacConfig(epochs=150, hidden_dim=128, n_layers=2, batch_size=64,
            n_seeds_per_epoch=8, buffer_capacity=50_000, rng_seed=seed + 1)

    untrained = SacAgent(env_cfg.state_width(v.max_peaks), sac_cfg)
    before = evaluate(untrained, v, env_cfg, seed + 2)

    t_start = time()
    agent, trace = train(v, None, env_cfg, sac_cfg)
    print(f"trained for {len(trace)} epochs in {time() - t_start:.1f} s")

    returns = np.array([e.mean_return for e in trace])
    first, last = returns[:10].mean(), returns[-10:].mean()
    print(f"mean return: first 10 epochs {first:.3f}, last 10 epochs {last:.3f}")

    after = evaluate(agent, v, env_cfg, seed + 2)
    print("untrained policy:")
    print(format_report(before))
    print("trained policy:")
    print(format_report(after))

    return_ok = last > first and (last - first) >= MIN_RETURN_GAIN*abs(first)
    vc_ok = after.vc_pct - before.vc_pct >= MIN_VC_GAIN
    print(f"return gain {'ok' if return_ok else 'too small'}, "
            f"VC gain {after.vc_pct - before.vc_pct:.1f} points")
    return return_ok and vc_ok


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    ok = main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
    print("PASS" if ok else "FAIL")
    sys.exit(0 if ok else 1)
