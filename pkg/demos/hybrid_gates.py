"""Walk a handful of files through the hybrid gate chain.

Each row shows which gate fired and how many content bytes it cost.
Cheap metadata gates run first, so most files never get opened.
"""

from ctxgate import FilterConfig, MemoryFS, scan_repository, run_filter
from ctxgate.vfs import VirtualManifest

code = b"def load(self, path):\n    if path is None:\n        return self.default\n"
files = {
    "src/loader.py": code * 200,
    "data/train.csv": b"0.1,0.2,0.3\n" * 50_000,
    "models/weights.pkl": b"\x80\x04\x95" + bytes(5000),
    "assets/logo": b"\x89PNG\r\n\x1a\n" + bytes(4000),
    "notes/numbers.txt": b"1 2 3 4 5 6 7 8 9 10\n" * 400,
    "dump/huge.py": code * 20_000,
}
fs = MemoryFS(VirtualManifest.from_files(files))
report = run_filter("hybrid", scan_repository(fs), fs, FilterConfig(theta=1_048_576))

for row in report.rows:
    d = row.decision
    print(f"{row.path:22} {d.verdict.value:8} {d.reason.value:22} gate={d.gate or '-':10} read={d.bytes_read}")

print("total content bytes read:", fs.counters.content_bytes_read)
