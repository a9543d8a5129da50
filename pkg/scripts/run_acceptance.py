"""Run every acceptance criterion at full size and save a JSON report.

Takes a bit over an hour on one core; --skip drops criteria by number.

    python3 scripts/run_acceptance.py --out runs/acceptance.json --skip 9 10
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from test_acceptance import CRITERIA  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/acceptance.json")
    ap.add_argument("--skip", type=int, nargs="*", default=[])
    args = ap.parse_args()

    results = {}
    for number, fn in CRITERIA:
        if number in args.skip:
            continue
        r = fn()
        results[number] = r.to_dict()
        print(f"criterion {number:>2} {r.line()} [{r.seconds:.1f}s]", flush=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(results, indent=2, sort_keys=True))
    sys.exit(0 if all(r["passed"] for r in results.values()) else 1)


if __name__ == "__main__":
    main()
