"""Regenerate the benchmark reference fixtures in src/levyscale/data.

Usage: python scripts/make_references.py [table1 ... table6]

Tables 1 and 2 use the meromorphic series with 1000 roots, table 3 the
rational closed form, tables 4 and 5 a high resolution Filon run checked
against Euler inversion at M=60, and table 6 the atom expansion.  Expect a
few minutes in total.
"""

import json
import pathlib
import sys
import time

from levyscale.bench import SUITES, compute_reference

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "levyscale" / "data"


def main(argv):
    suites = argv or list(SUITES)
    OUT.mkdir(parents=True, exist_ok=True)
    for s in suites:
        t0 = time.perf_counter()
        data = compute_reference(s)
        path = OUT / f"{s}.json"
        path.write_text(json.dumps(data, indent=1) + "\n")
        note = ""
        if "crosscheck" in data:
            note = f", cross-check max rel diff {data['crosscheck']['max_rel_diff']:.1e}"
        print(f"{s}: wrote {path.name} in {time.perf_counter() - t0:.1f} s{note}")


if __name__ == "__main__":
    main(sys.argv[1:])
