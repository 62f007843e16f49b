"""Regenerate ``src/pdtrace/_qtable.py`` from scipy's studentized range quantiles."""

import os

import numpy as np
from scipy.stats import studentized_range

ALPHAS = (0.05, 0.01)
KS = tuple(range(2, 11))
DFS = tuple(range(2, 21)) + (24, 30, 40, 60, 120)


def main():
    lines = [
        '"""Upper critical values of the studentized range, q(alpha; k, df).',
        "",
        "Generated by tools/make_qtable.py; do not edit by hand.",
        '"""',
        "",
        f"KS = {KS}",
        f"DFS = {DFS}",
        "",
        "# QTABLE[alpha][k] lists q for each df in DFS, then df = infinity",
        "QTABLE = {",
    ]
    for a in ALPHAS:
        lines.append(f"    {a}: {{")
        for k in KS:
            vals = [studentized_range.ppf(1 - a, k, df) for df in DFS]
            vals.append(studentized_range.ppf(1 - a, k, np.inf))
            lines.append(f"        {k}: ({', '.join(f'{v:.6f}' for v in vals)}),")
        lines.append("    },")
    lines.append("}")
    out = os.path.join(os.path.dirname(__file__), "..", "src", "pdtrace", "_qtable.py")
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
