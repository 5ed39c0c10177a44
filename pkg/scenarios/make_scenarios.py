"""Regenerate the scenario files in this directory.

    python3 scenarios/make_scenarios.py
"""

import json
import os
import sys

from ncleray import exactlin as el
from ncleray import formats, models
from ncleray.complexes import CochainComplex, FilteredComplex, Filtration, trivial_filtration

HERE = os.path.dirname(os.path.abspath(__file__))


def _write(name, obj):
    path = os.path.join(HERE, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, ensure_ascii=False, indent=1) + "\n")
    return path


def interval():
    # cochains of an interval: two vertices, one edge
    return CochainComplex((2, 1), (el.matrix([["-1"], ["1"]]),))


def two_step():
    # a class in degree 1 at filtration 0 hits one at filtration 2: only d_2 sees it
    c = CochainComplex((1, 1, 1), (el.matrix([["0"]]), el.matrix([["1"]])))
    lower = (el.zero_space(1), el.zero_space(1), el.full_space(1))
    levels = (tuple(c.full(n) for n in range(3)), lower, lower)
    return FilteredComplex(c, Filtration(levels))


def main():
    c = interval()
    _write("trivial_filtered.json", formats.complex_to_json(c, trivial_filtration(c)))
    _write("no_filtration.json", formats.complex_to_json(c))
    _write("two_step.json", formats.complex_to_json(two_step().complex, two_step().filtration, sparse=True))
    bad = CochainComplex((1, 1, 1), (el.matrix([["1"]]), el.matrix([["2"]])))
    _write("d_squared_nonzero.json", formats.complex_to_json(bad))
    obj = formats.complex_to_json(c)
    obj["d"][0][1][0] = "1/0"
    _write("bad_rational.json", obj)

    A = models.heisenberg(1)
    B = models.circle(1)
    _write("heisenberg_N1.json", formats.dga_to_json(A, models.iota(1, base=B, total=A),
                                                     models.twisted_module(1, algebra=A)))
    _write("u_inclusion_N1.json", formats.dga_to_json(A, models.u_inclusion(1, base=B, total=A)))
    _write("collapse_N1.json", formats.dga_to_json(A, models.collapse(1, base=B, total=A)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
