"""Reduction as a function of the size threshold over a few synthetic repos.

Prints the same CSV that ``ctxgate sweep`` emits.
"""

import random

import numpy as np

from ctxgate import MemoryFS, scan_repository
from ctxgate.analysis import DEFAULT_THETAS, aggregate_corpus, threshold_sweep
from ctxgate.tokens import estimate_all
from ctxgate.vfs import ManifestEntry, VirtualManifest

rng = random.Random(11)


def synthetic_repo(n_files):
    # log-normal sizes give the heavy right tail real repositories show
    sizes = np.exp(np.array([rng.gauss(8.5, 2.0) for _ in range(n_files)])).astype(int)
    return VirtualManifest([ManifestEntry(f"f{i:05d}", int(s)) for i, s in enumerate(sizes)])


per_theta = {t: [] for t in DEFAULT_THETAS}
for _ in range(5):
    fs = MemoryFS(synthetic_repo(rng.randint(500, 3000)))
    records = scan_repository(fs)
    for theta, res in threshold_sweep(records, estimate_all(records), list(DEFAULT_THETAS)):
        per_theta[theta].append(res)

print("theta_bytes,mean_pct,std_pct,min_pct,max_pct")
for theta, results in per_theta.items():
    s = aggregate_corpus(results)
    print(f"{theta},{s.mean:.2f},{s.std:.2f},{s.min:.2f},{s.max:.2f}")
