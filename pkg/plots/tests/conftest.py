import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parents[1]))


@pytest.fixture(scope="session")
def comparison_csv(tmp_path_factory):
    """A real comparison CSV produced through the runner CLI: DCCAST and
    P2P-SRPT(K=3) on GScale, copies 1..6, two seeds."""
    out_dir = tmp_path_factory.mktemp("comparison")
    paths = []
    for scheme in ("DCCAST", "P2P-SRPT"):
        out = out_dir / f"{scheme.lower()}.csv"
        cmd = [
            sys.executable, "-m", "dccast_sim.cli", "run",
            "--scheme", scheme, "--topology", "gscale",
            "--copies", "1-6", "--seeds", "1,2", "--out", str(out),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        paths.append(str(out))
    merged = out_dir / "comparison.csv"
    header_written = False
    with open(merged, "w") as dst:
        for p in paths:
            with open(p) as src:
                header = src.readline()
                if not header_written:
                    dst.write(header)
                    header_written = True
                dst.write(src.read())
    return str(merged)
