"""A few huge files hold most of the bytes; a size gate alone removes them.

Builds a size-only manifest (nothing is ever read) and shows the byte
histogram and the token reduction at several thresholds.
"""

from ctxgate import FilterConfig, MemoryFS, scan_repository, run_filter
from ctxgate.analysis import bucket_histogram, compute_reduction
from ctxgate.tokens import estimate_all
from ctxgate.vfs import ManifestEntry, VirtualManifest

entries = [ManifestEntry(f"src/m{i:04d}.py", 10_000) for i in range(990)]
entries += [ManifestEntry(f"data/blob{i:02d}.bin", 10_000_000) for i in range(10)]
fs = MemoryFS(VirtualManifest(entries, name="tail"))

records = scan_repository(fs)
estimates = estimate_all(records)

hist = bucket_histogram(records)
for b in hist.buckets:
    print(f"{b.label:>10}  files={b.file_count:4d}  bytes={b.pct_of_bytes:6.2f}%")

for theta in (50_000, 1_048_576, 20_000_000):
    report = run_filter("size", records, fs, FilterConfig(theta=theta))
    red = compute_reduction(report, estimates)
    print(f"theta={theta:>10}  flagged={red.flagged_count:3d}  reduction={red.reduction_pct:.2f}%")

# the whole run touched metadata only
print("content bytes read:", fs.counters.content_bytes_read)
