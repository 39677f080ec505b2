"""
End-to-end evaluation protocol
==============================

Runs the full pipeline (simulate, train, calibrate, evaluate, sweep,
compare) into a scratch directory and lists what it wrote. The same run is
available as ``reliabench protocol --out-dir DIR``.
"""

import sys
import tempfile
from pathlib import Path

from reliabench import cli

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="reliabench-"))
cli.main(["protocol", "--out-dir", str(out)])
for path in sorted(out.rglob("*.csv")):
    print(path.relative_to(out))
print((out / "table1_metrics.csv").read_text())
