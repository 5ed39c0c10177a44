"""Deterministic run reports, rendered as Markdown or JSON.

A report is a list of sections.  Every value is reduced to plain JSON data
first (see :func:`plain`) so both renderings come from the same content and
identical input gives identical bytes.
"""

import json
from fractions import Fraction

import numpy as np

from . import exactlin as el


def plain(x):
    if isinstance(x, dict):
        return {_key(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [plain(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return el.format_scalar(x)
    if x is None or isinstance(x, (str, float)):
        return x
    return str(x)


def _key(k):
    if isinstance(k, tuple):
        return ",".join(str(_key(x)) for x in k)
    return str(k)


class Section:
    def __init__(self, title, ok=None):
        self.title = title
        self.ok = ok
        self.facts = []
        self.grids = []
        self.failures = []
        self.matrices = []

    def fact(self, key, value):
        self.facts.append((key, plain(value)))
        return self

    def grid(self, label, g):
        self.grids.append((label, g))
        return self

    def matrix(self, label, m):
        self.matrices.append((label, [[el.format_scalar(x) for x in row] for row in el.as_matrix(m)]
                              if getattr(m, "size", 1) else []))
        return self

    def from_report(self, rep, limit=5):
        self.ok = bool(rep.ok) if self.ok is None else (self.ok and bool(rep.ok))
        self.failures.extend(plain(f) for f in rep.failures[:limit])
        if len(rep.failures) > limit:
            self.fact("further failures", len(rep.failures) - limit)
        return self

    def to_json(self, verbose):
        out = {"title": self.title}
        if self.ok is not None:
            out["ok"] = self.ok
        for k, v in self.facts:
            out[k] = v
        if self.grids:
            out["grids"] = {label: g for label, g in self.grids}
        if self.failures:
            out["failures"] = self.failures
        if verbose and self.matrices:
            out["matrices"] = {label: m for label, m in self.matrices}
        return out


def box(dims):
    """Bounding box ``(pmax, qmax)`` of the nonzero cells, at least ``(0, 0)``."""
    nz = [pq for pq, x in dims.items() if x]
    return (max((p for p, _ in nz), default=0), max((q for _, q in nz), default=0))


def grid(dims, bounds):
    """Rows ``q = 0..qmax`` of ``[dim E^{p,q} for p = 0..pmax]``."""
    pmax, qmax = bounds
    return [[int(dims.get((p, q), 0)) for p in range(pmax + 1)] for q in range(qmax + 1)]


class Document:
    def __init__(self, command, header=()):
        self.command = command
        self.header = list(header)
        self.sections = []

    def section(self, title, ok=None):
        s = Section(title, ok)
        self.sections.append(s)
        return s

    @property
    def ok(self):
        return all(s.ok is not False for s in self.sections)

    def to_json(self, verbose=False):
        return {
            "command": self.command,
            "header": [[k, plain(v)] for k, v in self.header],
            "ok": self.ok,
            "sections": [s.to_json(verbose) for s in self.sections],
        }

    def render(self, fmt="md", verbose=False):
        if fmt == "json":
            return json.dumps(self.to_json(verbose), ensure_ascii=False, indent=2) + "\n"
        if fmt == "md":
            return _markdown(self, verbose)
        raise ValueError(f"unknown format {fmt!r}")


def _verdict(ok):
    return "" if ok is None else (" : pass" if ok else " : FAIL")


def _value(v):
    if isinstance(v, list):
        return "(" + ", ".join(_value(x) for x in v) + ")"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def _md_grid(label, g):
    width = len(g[0]) if g else 0
    lines = [f"{label}:", "", "| q \\ p | " + " | ".join(str(p) for p in range(width)) + " |",
             "|---" * (width + 1) + "|"]
    for q in reversed(range(len(g))):
        lines.append(f"| {q} | " + " | ".join(str(x) for x in g[q]) + " |")
    lines.append("")
    return lines


def _markdown(doc, verbose):
    lines = [f"# ncleray {doc.command}", ""]
    for k, v in doc.header:
        lines.append(f"- {k}: {_value(plain(v))}")
    lines += [f"- verdict: {'pass' if doc.ok else 'FAIL'}", ""]
    for s in doc.sections:
        lines += [f"## {s.title}{_verdict(s.ok)}", ""]
        for k, v in s.facts:
            lines.append(f"- {k}: {_value(v)}")
        if s.facts:
            lines.append("")
        for label, g in s.grids:
            lines += _md_grid(label, g)
        for f in s.failures:
            lines.append(f"- failure: {_value(f)}")
        if s.failures:
            lines.append("")
        if verbose:
            for label, m in s.matrices:
                lines.append(f"{label} =")
                lines += ["    [" + ", ".join(row) + "]" for row in m] or ["    []"]
                lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"
