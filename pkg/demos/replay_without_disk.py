"""Capture a real tree once, then replay it with zero filesystem access.

The replayed report matches the on-disk one except for timing and
the source description.
"""

import tempfile
from pathlib import Path

from ctxgate import LocalFS, MemoryFS
from ctxgate.pipeline import run_pipeline
from ctxgate.scan import scan_repository
from ctxgate.vfs import VirtualManifest, capture_manifest, materialize

files = {
    "README.md": "# tiny\n",
    "src/app.py": "def main():\n    return 0\n" * 50,
    "data/rows.csv": "1,2,3\n" * 400_000,
}

with tempfile.TemporaryDirectory() as tmp:
    materialize(VirtualManifest.from_files(files), tmp)
    disk = LocalFS(tmp)
    on_disk = run_pipeline(disk, "hybrid")
    manifest = capture_manifest(disk, [r.path for r in scan_repository(disk)], prefix_limit=65_536)
    Path(tmp, "manifest.json").write_text(manifest.dumps())

replayed = run_pipeline(MemoryFS(VirtualManifest.loads(manifest.dumps())), "hybrid")

same = [(a.path, a.decision, a.tokens) for a in on_disk.rows] == \
       [(b.path, b.decision, b.tokens) for b in replayed.rows]
print("identical decisions and tokens:", same)
print("real syscalls on disk:", on_disk.io["real_syscalls"], " in replay:", replayed.io["real_syscalls"])
print(replayed.to_table())
