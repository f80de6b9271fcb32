"""Run check-cocycle over every corpus file and print one summary line each."""

import io
import json
import pathlib
import sys

from gvbundle.cli import run

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def main() -> int:
    worst = 0
    for path in sorted(CORPUS.glob("*.gvb")):
        out, err = io.StringIO(), io.StringIO()
        code = run(["check-cocycle", str(path)], out, err)
        worst = max(worst, code)
        if code == 2:
            print(f"{path.name}: input error: {err.getvalue().strip()}")
            continue
        checks = json.loads(out.getvalue())["checks"]
        ok = sum(c["pass"] for c in checks)
        print(f"{path.name}: {ok}/{len(checks)} checks pass")
    return worst


if __name__ == "__main__":
    sys.exit(main())
