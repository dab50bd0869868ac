"""
Running scenarios from config files
===================================

The ``qfchain`` command reads a JSON config, runs the closed form, the
oracle or both, and writes ``trajectory.csv`` plus ``summary.json``.  The
same entry point is callable from Python, which is what this script does.
"""

import json
import tempfile
from pathlib import Path

from qfchain import cli

here = Path(__file__).parent / "configs"
out = Path(tempfile.mkdtemp(prefix="qfchain-demo-"))

# A long closed-form run: six windows sampled every 0.01.
code = cli.main(["run", "--config", str(here / "chain_closed_form.json"), "--out", str(out / "chain")])
print("exit code", code)
print((out / "chain" / "trajectory.csv").read_text().splitlines()[0])

# Cross-validation against the Fock oracle; exit code 2 would mean failure.
code = cli.main(["run", "--config", str(here / "desk_cross_validate.json"), "--out", str(out / "desk")])
summary = json.loads((out / "desk" / "summary.json").read_text())
print("exit code", code, "verdict", summary["verdict"], "max deviation", summary["max_char_deviation"])

# Only the certificate.
cli.main(["cp-check", "--config", str(here / "chain_closed_form.json")])
