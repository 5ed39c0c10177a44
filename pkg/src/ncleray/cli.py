"""Command line driver: ``ncleray validate | pages | leray``.

Exit codes: 0 when every check passes, 1 when a check fails (the report
says which, with a witness), 2 when the input cannot be read or parsed.
"""

import argparse
import os
import sys

from . import exactlin as el
from . import leray, models, report
from . import specseq
from .complexes import split_rows, validate_complex, validate_filtration
from .dgalg import check_axioms, check_module_leibniz, check_morphism, curvature, format_form, trivial_module
from .formats import COMPLEX, FormatError, complex_from_json, dga_from_json, detect, dump_json, filtered_sum_to_json, load_json

OK, FAILED, BAD_INPUT = 0, 1, 2
MODELS = ("heisenberg", "identity")


class UsageError(Exception):
    pass


def _lambda(text):
    try:
        return el.parse_scalar(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="ncleray", description="Exact spectral sequences for sector-graded DGAs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("md", "json"), default="md")
        p.add_argument("--verbose", action="store_true", help="include matrices in the report")
        p.add_argument("-o", "--output", metavar="PATH", help="write the report here instead of stdout")

    p = sub.add_parser("validate", help="check a complex.v1 or dga.v1 file")
    p.add_argument("path")
    common(p)

    p = sub.add_parser("pages", help="spectral sequence of a filtered complex.v1 file")
    p.add_argument("path")
    p.add_argument("--rmax", type=_positive, default=4)
    common(p)

    p = sub.add_parser("leray", help="Leray spectral sequence of a model or a dga.v1 file")
    p.add_argument("source", help="heisenberg, identity, or a dga.v1 file with a morphism block")
    p.add_argument("--window", type=_positive, default=3, help="window N for the built-in models")
    p.add_argument("--lambda", dest="lam", type=_lambda, default=el.Q0, metavar="P/Q",
                   help="twist of the heisenberg module")
    p.add_argument("--serre", action="store_true", help="replace the module by E = A, ∇ = d")
    p.add_argument("--rmax", type=_positive, default=4)
    p.add_argument("--emit", metavar="PATH", help="write the Leray filtration as complex.v1")
    common(p)
    return ap


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _validate_complex(doc, obj):
    c, rows = complex_from_json(obj, raw=True)
    fs = split_rows(c, rows or [])
    s = doc.section("complex")
    s.fact("dims", c.dims).fact("blocks", len(fs.blocks))
    for b, blk in enumerate(fs.blocks):
        rep = validate_complex(blk.complex)
        for f in rep.failures:
            f["block"] = b
        s.from_report(rep)
    if s.ok is None:
        s.ok = True
    if rows is None:
        doc.section("filtration").fact("present", False)
        return
    s = doc.section("filtration")
    s.fact("present", True).fact("depth", len(rows))
    for b, blk in enumerate(fs.blocks):
        rep = validate_filtration(blk.complex, blk.filtration)
        for f in rep.failures:
            f["block"] = b
        s.from_report(rep)
    if s.ok is None:
        s.ok = True


def _validate_dga(doc, obj):
    A, phi, mod = dga_from_json(obj)
    s = doc.section("algebra")
    s.fact("sectors", A.S).fact("frame ranks", [A.rank(n) for n in range(A.top_degree + 1)])
    s.from_report(check_axioms(A))
    if phi is not None:
        s = doc.section("morphism")
        s.from_report(check_axioms(phi.source))
        s.from_report(check_morphism(phi))
    if mod is not None:
        s = doc.section("module")
        s.fact("rank", mod.rank)
        s.from_report(check_module_leibniz(mod))
        cr = curvature(mod)
        s.fact("flat", cr.is_flat)
        if not cr.is_flat:
            s.fact("curvature witness", cr.witness)


def cmd_validate(args):
    obj = load_json(args.path)
    fmt = detect(obj)
    doc = report.Document("validate", [("input", os.path.basename(args.path)), ("format", fmt)])
    if fmt == COMPLEX:
        _validate_complex(doc, obj)
    else:
        _validate_dga(doc, obj)
    return doc


# ---------------------------------------------------------------------------
# pages
# ---------------------------------------------------------------------------


def _page_sections(doc, sr, r_max, bounds):
    s = doc.section("pages")
    for r in range(1, r_max + 1):
        s.grid(f"E_{r}", report.grid(sr.dims(r), bounds))
    s.grid("E_inf", report.grid(sr.limit, bounds))
    s.fact("stable from r", sr.stable_from)
    return s


def cmd_pages(args):
    obj = load_json(args.path)
    if detect(obj) != COMPLEX:
        raise UsageError("pages needs a complex.v1 file")
    c, rows = complex_from_json(obj, raw=True)
    if rows is None:
        raise UsageError("the complex has no filtration block")
    fs = split_rows(c, rows)
    doc = report.Document("pages", [("input", os.path.basename(args.path)), ("r_max", args.rmax)])
    s = doc.section("input")
    s.fact("dims", c.dims).fact("blocks", len(fs.blocks))
    for blk in fs.blocks:
        rep = validate_complex(blk.complex).merge(validate_filtration(blk.complex, blk.filtration))
        s.from_report(rep)
    if s.ok is None:
        s.ok = True
    if not s.ok:
        return doc
    sr = specseq.run(fs, r_max=args.rmax, validate=False)
    _page_sections(doc, sr, args.rmax, report.box(sr.dims(1)))
    conv = specseq.convergence_check(sr)
    doc.section("convergence").from_report(conv).fact("cohomology", conv.cohomology)
    return doc


# ---------------------------------------------------------------------------
# leray
# ---------------------------------------------------------------------------


def _describe_module(mod):
    A = mod.algebra
    if all(not mod.forms[i][j] for i in range(mod.rank) for j in range(mod.rank)):
        return f"rank {mod.rank}, ∇ = d"
    entries = [f"θ[{i},{j}] = {format_form(A, mod.forms[i][j])}"
               for i in range(mod.rank) for j in range(mod.rank) if mod.forms[i][j]]
    return f"rank {mod.rank}, " + "; ".join(entries)


def _fibration_data(args):
    if args.source in MODELS:
        if args.source == "heisenberg":
            fd = models.heisenberg_fibration(args.window, args.lam)
        else:
            if args.lam != 0:
                raise UsageError("--lambda applies to the heisenberg model only")
            fd = models.identity_fibration(args.window)
        label = args.source
        window = args.window
    else:
        obj = load_json(args.source)
        if detect(obj) == COMPLEX:
            raise UsageError("leray needs a dga.v1 file")
        A, phi, mod = dga_from_json(obj)
        if phi is None:
            raise UsageError("the dga.v1 file has no morphism block")
        if args.lam != 0:
            raise UsageError("--lambda applies to the heisenberg model only")
        fd = leray.FibrationData(phi, mod or trivial_module(A))
        label = os.path.basename(args.source)
        window = None
    if args.serre:
        fd = leray.serre(fd.iota)
    return fd, label, window


def cmd_leray(args):
    fd, label, window = _fibration_data(args)
    header = [("model", label)]
    if window is not None:
        header.append(("window", window))
    header += [("module", _describe_module(fd.module)), ("r_max", args.rmax)]
    doc = report.Document("leray", header)
    A, B = fd.total, fd.base

    s = doc.section("hypotheses")
    s.fact("base sectors", B.S).fact("total sectors", A.S)
    s.fact("base frame ranks", [B.rank(n) for n in range(B.top_degree + 1)])
    s.fact("total frame ranks", [A.rank(n) for n in range(A.top_degree + 1)])
    s.from_report(leray.hypotheses(fd))
    if not s.ok:
        return doc

    s = doc.section("fibration")
    ranks = leray.n_ranks(fd)
    s.grid("N ranks", report.grid({pq: (x if x is not None else -1) for pq, x in ranks.items()},
                                  (fd.top, fd.top)))
    fib = leray.fibration_check(fd)
    s.from_report(fib, limit=10)
    if not s.ok:
        return doc

    if args.emit:
        dump_json(filtered_sum_to_json(leray.build_leray_filtration(fd)), args.emit)

    s = doc.section("fiber cohomology")
    has_cert = True
    for q in range(fd.top + 1):
        hh = leray.hat_h(fd, q)
        s.fact(f"Ĥ_{q}", {"rank": hh.rank if hh.certificate else "not free", "total dim": hh.total_dim})
        has_cert = has_cert and hh.certificate is not None
    s.ok = True

    if has_cert:
        s = doc.section("∇_q")
        for q in range(fd.top + 1):
            if not leray.hat_h(fd, q).rank:
                continue
            nq = leray.nabla_q(fd, q)
            s.from_report(nq.report)
            s.from_report(leray.nabla_q_curvature(fd, q))
            s.fact(f"∇_{q}", _describe_module(nq.module))
            s.matrix(f"∇_{q}", nq.matrix)
        if s.ok is None:
            s.ok = True
    else:
        doc.section("∇_q").fact("skipped", "some Ĥ_q is not free over the base")

    run = leray.engine_run(fd, args.rmax)
    bounds = report.box(run.dims(1))
    _page_sections(doc, run, args.rmax, bounds)

    cc = leray.cross_check(fd, args.rmax)
    s = doc.section("convergence").from_report(cc)
    s.grid("E_1 predicted", report.grid(cc.e1_predicted, bounds))
    if cc.e2_predicted is not None:
        s.grid("E_2 predicted", report.grid(cc.e2_predicted, bounds))
    s.fact("E_2 = E_inf", report.grid(cc.e2, bounds) == report.grid(cc.limit, bounds))
    s.fact("totals", cc.totals).fact("H*(A; E, ∇)", cc.sheaf)
    return doc


COMMANDS = {"validate": cmd_validate, "pages": cmd_pages, "leray": cmd_leray}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc = COMMANDS[args.command](args)
    except (FormatError, UsageError) as exc:
        print(f"ncleray: error: {exc}", file=sys.stderr)
        return BAD_INPUT
    text = doc.render(args.format, args.verbose)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return OK if doc.ok else FAILED


if __name__ == "__main__":
    sys.exit(main())
