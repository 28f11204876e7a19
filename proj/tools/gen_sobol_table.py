#!/usr/bin/env python3
"""Regenerates src/sobol_directions.inc from the Joe-Kuo direction numbers
shipped with scipy (new-joe-kuo-6.21201)."""
import os
import sys

import numpy as np
import scipy

DIMS = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
out = sys.argv[2] if len(sys.argv) > 2 else os.path.join(
    os.path.dirname(__file__), "..", "src", "sobol_directions.inc")

table = np.load(os.path.join(os.path.dirname(scipy.__file__), "stats",
                             "_sobol_direction_numbers.npz"))
poly, vinit = table["poly"], table["vinit"]

with open(out, "w") as f:
    f.write("// Generated by tools/gen_sobol_table.py; do not edit.\n")
    f.write("// Joe-Kuo direction numbers: {primitive polynomial, {m_1..m_s}}.\n")
    for d in range(DIMS):
        p = int(poly[d])
        degree = p.bit_length() - 1
        m = ", ".join(str(int(v)) for v in vinit[d, :max(degree, 1)])
        f.write(f"{{{p}u, {{{m}}}}},\n")
