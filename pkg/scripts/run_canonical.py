"""Run the canonical scenario through the CLI and print the task statuses."""

import json
import sys
from pathlib import Path

from halfspace_neumann.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("output/canonical")
    code = cli_main(["run", str(ROOT / "configs" / "canonical.yaml"), "--output-dir", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    for name, res in summary["tasks"].items():
        print(f"{name:20s} {res['status']}")
    solve = summary["tasks"].get("solve", {}).get("result") or {}
    if solve:
        print(f"iterations {solve['iterations']}  residual {solve['residual']:.3e}")
    return code


if __name__ == "__main__":
    sys.exit(main())
