# Trains the oracle on 2,000 synthesized streamlines from the four-bundle
# phantom and reports held-out classification scores.

import logging
import sys
from time import time

import numpy as np

from tractoracle.oracle import (
    OracleConfig,
    classification_metrics,
    score_batch,
    stratified_split,
    train_oracle,
)
from tractoracle.phantom import (
    demo_phantom_spec,
    generate_phantom,
    synthesize_labeled_set,
)


MIN_ACCURACY = 0.95
MIN_F1 = 0.93


def main(seed=0):
    v = generate_phantom(demo_phantom_spec("four-bundles"), rng_seed=seed)

    t_start = time()
    data = synthesize_labeled_set(v, n_pos=1000, n_neg=1000, rng_seed=seed + 1)
    print(f"synthesized {len(data)} streamlines in {time() - t_start:.1f} s")

    # hold out a test set that training never sees, not even for validation
    train_idx, test_idx = stratified_split(data.targets, 0.2,
            np.random.default_rng(seed + 2))
    train_data = data.subset(train_idx)
    test_data = data.subset(test_idx)

    cfg = OracleConfig(n_points=32, ffn_dim=128)
    t_start = time()
    model, trace = train_oracle(train_data, cfg, epochs=30, batch_size=32,
            rng_seed=seed + 3)
    print(f"trained for {len(trace)} epochs in {time() - t_start:.1f} s, "
            f"final loss {trace[-1].loss:.4f}")

    scores = score_batch(model, list(test_data.streamlines))
    metrics = classification_metrics(scores, test_data.targets, cfg.threshold)
    print(f"held out: {len(test_data)} streamlines")
    print(f"accuracy:    {metrics.accuracy:.4f}")
    print(f"sensitivity: {metrics.sensitivity:.4f}")
    print(f"precision:   {metrics.precision:.4f}")
    print(f"f1:          {metrics.f1:.4f}")

    for mode in sorted(set(test_data.modes)):
        idx = [i for i, m in enumerate(test_data.modes) if m == mode]
        predicted = scores[idx] >= cfg.threshold
        correct = np.mean(predicted == test_data.targets[idx].astype(bool))
        print(f"  {mode:>12}: {correct:.3f} correct ({len(idx)} streamlines)")

    return metrics.accuracy >= MIN_ACCURACY and metrics.f1 >= MIN_F1


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    ok = main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
    print("PASS" if ok else "FAIL")
    sys.exit(0 if ok else 1)
