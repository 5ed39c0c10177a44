"""JSON file formats ``complex.v1`` and ``dga.v1``.

Rationals are strings ``"p/q"`` (or ``"n"``).  A matrix is either dense, a
list of rows, or sparse::

    {"rows": r, "cols": c, "entries": [[i, j, "p/q"], ...]}

``complex.v1``::

    {"format": "complex.v1", "dims": [...], "d": [matrix, ...],
     "filtration": [[basis matrix of F^m C^n for n in degrees] for m in levels]}

``dga.v1`` stores a :class:`~ncleray.dgalg.SectorDGA` as triplet lists, with
optional ``morphism`` (the source DGA inline) and ``module`` blocks.
"""

import json

import numpy as np

from . import exactlin as el
from .complexes import CochainComplex, FilteredComplex, Filtration, InvalidComplex
from .dgalg import ConnectionModule, DGAMorphism, SectorDGA, form

COMPLEX = "complex.v1"
DGA = "dga.v1"


class FormatError(ValueError):
    pass


def _scalar(x):
    try:
        return el.parse_scalar(x)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _matrix(obj, rows=None, cols=None, what="matrix"):
    if isinstance(obj, dict):
        try:
            r, c, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
        except (KeyError, TypeError, ValueError):
            raise FormatError(f"{what}: sparse matrices need rows, cols and entries") from None
        m = el.zeros(r, c)
        for e in entries:
            if not isinstance(e, list) or len(e) != 3:
                raise FormatError(f"{what}: sparse entries are [i, j, value]")
            i, j, v = e
            if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < r and 0 <= j < c):
                raise FormatError(f"{what}: entry index {[i, j]} out of range")
            m[i, j] = _scalar(v)
    elif isinstance(obj, list):
        if not obj:
            m = el.zeros(0, cols or 0)
        else:
            if not all(isinstance(row, list) for row in obj):
                raise FormatError(f"{what}: dense matrices are lists of rows")
            width = len(obj[0])
            if any(len(row) != width for row in obj):
                raise FormatError(f"{what}: ragged rows")
            m = el.zeros(len(obj), width)
            for i, row in enumerate(obj):
                for j, v in enumerate(row):
                    m[i, j] = _scalar(v)
            if width == 0 and cols:
                m = el.zeros(len(obj), cols)
    else:
        raise FormatError(f"{what}: expected a list of rows or a sparse object")
    if rows is not None and m.shape[0] != rows:
        raise FormatError(f"{what}: expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise FormatError(f"{what}: expected {cols} columns, got {m.shape[1]}")
    return m


def _dense(m):
    return [[el.format_scalar(x) for x in row] for row in m]


def _sparse(m):
    entries = [[int(i), int(j), el.format_scalar(m[i, j])] for i, j in zip(*np.nonzero(m != 0))]
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "entries": entries}


def _encode(m, sparse):
    return _sparse(m) if sparse else _dense(m)


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not JSON: {exc}") from None


def dump_json(obj, path=None):
    text = json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def detect(obj):
    fmt = obj.get("format") if isinstance(obj, dict) else None
    if fmt not in (COMPLEX, DGA):
        raise FormatError(f"unknown format {fmt!r}; expected {COMPLEX!r} or {DGA!r}")
    return fmt


# ---------------------------------------------------------------------------
# complex.v1
# ---------------------------------------------------------------------------


def complex_from_json(obj, raw=False):
    """``(CochainComplex, Filtration or None)``.

    With ``raw=True`` the filtration comes back unreduced, as ``rows[m][n]``
    matrices (see :func:`~ncleray.complexes.split_rows`).
    """
    if detect(obj) != COMPLEX:
        raise FormatError("not a complex.v1 document")
    dims = obj.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(x, int) and x >= 0 for x in dims):
        raise FormatError("dims must be a non-empty list of non-negative integers")
    ds = obj.get("d", [])
    if not isinstance(ds, list) or len(ds) != len(dims) - 1:
        raise FormatError(f"{len(dims)} degrees need {len(dims) - 1} differentials")
    d = [_matrix(m, dims[n], dims[n + 1], what=f"d[{n}]") for n, m in enumerate(ds)]
    try:
        c = CochainComplex(tuple(dims), tuple(d))
    except InvalidComplex as exc:
        raise FormatError(str(exc)) from None
    filt = obj.get("filtration")
    if filt is None:
        return c, None
    if not isinstance(filt, list) or not filt:
        raise FormatError("filtration must be a non-empty list of levels")
    levels = []
    for m, level in enumerate(filt):
        if not isinstance(level, list) or len(level) != len(dims):
            raise FormatError(f"filtration level {m} must list one basis per degree")
        row = []
        for n, basis in enumerate(level):
            b = _matrix(basis, None, dims[n], what=f"F^{m} C^{n}")
            if raw:
                row.append(b)
            else:
                row.append(el.span(b, dims[n]) if b.shape[0] else el.zero_space(dims[n]))
        levels.append(tuple(row))
    if raw:
        return c, levels
    return c, Filtration(tuple(levels))


def complex_to_json(c, f=None, sparse=False):
    out = {"format": COMPLEX, "dims": list(c.dims), "d": [_encode(m, sparse) for m in c.d]}
    if f is not None:
        out["filtration"] = [[_encode(sp.basis, sparse) for sp in level] for level in f.levels]
    return out


def filtered_sum_to_json(fs):
    """Sparse ``complex.v1`` of a block sum, laid out block after block."""
    top = fs.max_degree
    dims = [0] * (top + 1)
    d = [[] for _ in range(top)]
    depth = max((b.filtration.depth for b in fs.blocks), default=1)
    filt = [[[] for _ in range(top + 1)] for _ in range(depth)]
    counts = [[0] * (top + 1) for _ in range(depth)]
    for b in fs.blocks:
        c = b.complex
        start = list(dims)
        for n in range(min(top, c.max_degree)):
            for i, j in zip(*np.nonzero(c.d[n] != 0)):
                d[n].append([start[n] + int(i), start[n + 1] + int(j), el.format_scalar(c.d[n][i, j])])
        for m in range(depth):
            for n in range(min(top, c.max_degree) + 1):
                for row in b.F(m, n).basis:
                    for j in np.flatnonzero(row != 0):
                        filt[m][n].append([counts[m][n], start[n] + int(j), el.format_scalar(row[j])])
                    counts[m][n] += 1
        for n in range(top + 1):
            dims[n] += c.dim(n) if n <= c.max_degree else 0
    return {
        "format": COMPLEX,
        "dims": dims,
        "d": [{"rows": dims[n], "cols": dims[n + 1], "entries": d[n]} for n in range(top)],
        "filtration": [[{"rows": counts[m][n], "cols": dims[n], "entries": filt[m][n]}
                        for n in range(top + 1)] for m in range(depth)],
    }


def read_complex(path, raw=False):
    return complex_from_json(load_json(path), raw=raw)


def write_complex(path, fc_or_c, sparse=False):
    if isinstance(fc_or_c, FilteredComplex):
        obj = complex_to_json(fc_or_c.complex, fc_or_c.filtration, sparse)
    else:
        obj = complex_to_json(fc_or_c, None, sparse)
    return dump_json(obj, path)


# ---------------------------------------------------------------------------
# dga.v1
# ---------------------------------------------------------------------------


def _label_in(x):
    if isinstance(x, list):
        return tuple(_label_in(y) for y in x)
    if isinstance(x, (int, str)) and not isinstance(x, bool):
        return x
    raise FormatError(f"sector labels are integers, strings or lists, got {x!r}")


def _label_out(x):
    if isinstance(x, tuple):
        return [_label_out(y) for y in x]
    return x


def _triplets(entries, shape, what):
    arr = np.empty(shape, dtype=object)
    arr.fill(el.Q0)
    if not isinstance(entries, list):
        raise FormatError(f"{what} must be a list of index/value entries")
    for e in entries:
        if not isinstance(e, list) or len(e) != len(shape) + 1:
            raise FormatError(f"{what}: entries have {len(shape)} indices and a value")
        idx = e[:-1]
        if not all(isinstance(i, int) and 0 <= i < s for i, s in zip(idx, shape)):
            raise FormatError(f"{what}: index {idx} out of range")
        arr[tuple(idx)] = _scalar(e[-1])
    return arr


def _nonzero_entries(arr):
    out = []
    for idx in zip(*np.nonzero(arr != 0)):
        out.append([int(i) for i in idx] + [el.format_scalar(arr[idx])])
    return out


def _dga_core(obj):
    try:
        sec = obj["sectors"]
        labels = [_label_in(x) for x in sec["labels"]]
        unit = sec["unit"]
        frame = obj["frame"]
        flabels = list(frame["labels"])
        degrees = list(frame["degrees"])
    except (KeyError, TypeError):
        raise FormatError("dga.v1 needs sectors {labels, unit, product} and frame {labels, degrees}") from None
    S, F = len(labels), len(flabels)
    if len(set(labels)) != S:
        raise FormatError("duplicate sector labels")
    if len(degrees) != F or not all(isinstance(x, int) and x >= 0 for x in degrees):
        raise FormatError("frame degrees must be non-negative integers, one per label")
    if not isinstance(unit, int) or not 0 <= unit < S:
        raise FormatError("unit must be a sector index")
    prod = np.full((S, S), -1, dtype=np.int64)
    for e in sec.get("product", []):
        if not (isinstance(e, list) and len(e) == 3 and all(isinstance(i, int) and 0 <= i < S for i in e)):
            raise FormatError("product entries are [g, h, gh] sector indices")
        prod[e[0], e[1]] = e[2]
    T = _triplets(obj.get("wedge", []), (F, F, F), "wedge")
    commute = _triplets(obj.get("commute", []), (S, F, F), "commute")
    d = _triplets(obj.get("d", []), (S, F, F), "d")
    try:
        return SectorDGA(tuple(labels), unit, prod, tuple(flabels), tuple(degrees), T, commute, d,
                         name=str(obj.get("name", "")))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dga_from_json(obj):
    """``(SectorDGA, DGAMorphism or None, ConnectionModule or None)``."""
    if detect(obj) != DGA:
        raise FormatError("not a dga.v1 document")
    a = _dga_core(obj)
    phi = None
    if "morphism" in obj:
        mo = obj["morphism"]
        if not isinstance(mo, dict) or "source" not in mo:
            raise FormatError("morphism needs an inline source DGA")
        src = _dga_core(mo["source"])
        smap = mo.get("sector_map")
        if not isinstance(smap, list) or len(smap) != src.S or not all(
                isinstance(x, int) and -1 <= x < a.S for x in smap):
            raise FormatError("sector_map lists a target sector index (or -1) per source sector")
        P = _triplets(mo.get("frame_map", []), (src.F, a.F), "frame_map")
        phi = DGAMorphism(src, a, smap, P, name=str(mo.get("name", "")))
    mod = None
    if "module" in obj:
        mb = obj["module"]
        r = mb.get("rank") if isinstance(mb, dict) else None
        if not isinstance(r, int) or r < 1:
            raise FormatError("module rank must be a positive integer")
        pieces = [[{} for _ in range(r)] for _ in range(r)]
        for e in mb.get("connection", []):
            if not (isinstance(e, list) and len(e) == 5):
                raise FormatError("connection entries are [i, j, sector, frame, value]")
            i, j, g, k, v = e
            if not all(isinstance(x, int) for x in (i, j, g, k)) or not (
                    0 <= i < r and 0 <= j < r and 0 <= g < a.S and 0 <= k < a.F):
                raise FormatError(f"connection index {e[:4]} out of range")
            vec = pieces[i][j].setdefault(g, [el.Q0] * a.F)
            vec[k] = _scalar(v)
        try:
            forms = tuple(tuple(form(a, pieces[i][j]) for j in range(r)) for i in range(r))
            mod = ConnectionModule(a, r, forms, name=str(mb.get("name", "")))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    return a, phi, mod


def _dga_core_json(a):
    prod = [[int(g), int(h), int(a.prod[g, h])] for g in range(a.S) for h in range(a.S) if a.prod[g, h] >= 0]
    return {
        "name": a.name,
        "sectors": {"labels": [_label_out(s) for s in a.sectors], "unit": int(a.unit), "product": prod,
                    "partial": bool((a.prod < 0).any())},
        "frame": {"labels": list(a.frame), "degrees": list(a.degrees)},
        "wedge": _nonzero_entries(a.wedge_table),
        "commute": _nonzero_entries(a.commute),
        "d": _nonzero_entries(a.d),
    }


def dga_to_json(a, morphism=None, module=None):
    out = {"format": DGA}
    out.update(_dga_core_json(a))
    if morphism is not None:
        if morphism.target is not a:
            raise ValueError("the morphism must land in the exported DGA")
        out["morphism"] = {
            "name": morphism.name,
            "source": _dga_core_json(morphism.source),
            "sector_map": [int(x) for x in morphism.sector_map],
            "frame_map": _nonzero_entries(morphism.frame_map),
        }
    if module is not None:
        conn = []
        for i in range(module.rank):
            for j in range(module.rank):
                f = module.forms[i][j]
                for g in sorted(f):
                    for k, c in enumerate(f[g]):
                        if c != 0:
                            conn.append([i, j, int(g), k, el.format_scalar(c)])
        out["module"] = {"name": module.name, "rank": module.rank, "connection": conn}
    return out


def read_dga(path):
    return dga_from_json(load_json(path))


def write_dga(path, a, morphism=None, module=None):
    return dump_json(dga_to_json(a, morphism, module), path)
