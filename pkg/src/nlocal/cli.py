"""
Command-line front end.

    nlocal gen --example paper-2.1 --out ex21.json
    nlocal certify --in ex21.json --hub B
    nlocal canon --in model.json | nlocal born --in -

Exit status: 0 on success, 2 when a certificate proves non-membership
(``NECESSARY_FAIL`` or ``NOT_BELL_LOCAL``), 1 on usage or input errors.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__, codec
from .certify import (CertReport, SearchConfig, Verdict, bell_local_lp,
                      factorization_check, nlocal_search)
from .fixtures import bell_local_nonbilocal, perfectly_correlated_pt
from .models import (CanonicalNLocalForm, DiscreteNLocalModel, FullExpansion,
                     canonicalize, evaluate, expand_full,
                     path_point, random_model, star_mix)
from .quantum import QuantumRealization, born_evaluate, realize
from .strategies import deterministic_ct
from .tensor import CorrelationTensor, Scenario, SignalingError, mix, uniform_ct

log = logging.getLogger("nlocal")

GENERATORS = ("paper-2.1", "paper-3.1", "uniform", "deterministic", "random-model")
VERBS = ("gen", "eval", "canon", "expand", "realize", "born", "certify", "mix",
         "path", "star")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nlocal", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("--version", action="version", version=f"nlocal {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp, inputs=1):
        if inputs:
            sp.add_argument("--in", dest="inputs", action="append", default=[],
                            metavar="PATH", help="input document ('-' = stdin)")
        sp.add_argument("--out", default="-", help="output path ('-' = stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--quiet", action="store_true")
        return sp

    g = common(sub.add_parser("gen", help="generate a tensor or model"), inputs=0)
    g.add_argument("--example", required=True, choices=GENERATORS)
    g.add_argument("--scenario", type=Scenario.parse,
                   help="'o1,m1;o2,m2;...;oB,mB' (hub last)")
    g.add_argument("--strategies", type=_ints,
                   help="1-based strategy index per party, hub last")
    g.add_argument("--dims", type=_ints, help="hidden-variable sizes per edge")

    common(sub.add_parser("eval", help="evaluate a model to its tensor"))
    common(sub.add_parser("canon", help="strategy-indexed normal form"))
    common(sub.add_parser("expand", help="full deterministic expansion"))
    common(sub.add_parser("realize", help="separable quantum realization"))
    common(sub.add_parser("born", help="Born statistics of a realization"))

    c = common(sub.add_parser("certify", help="membership certificates"))
    c.add_argument("--hub", default=None, help="party to place at the hub")
    c.add_argument("--restarts", type=int, default=20)
    c.add_argument("--max-iters", type=int, default=2000)
    c.add_argument("--search-tol", type=float, default=1e-6)
    c.add_argument("--no-search", action="store_true",
                   help="skip the n-local witness search")
    c.add_argument("--no-lp", action="store_true", help="skip the Bell-local LP")

    m = common(sub.add_parser("mix", help="convex mixture of tensors"))
    m.add_argument("--weights", type=_floats, required=True)

    pa = common(sub.add_parser("path", help="point on the path between two models"))
    pa.add_argument("--t", type=float, required=True)
    pa.add_argument("--evaluate", action="store_true", help="emit the tensor")

    st = common(sub.add_parser("star", help="mix a model towards its sun"))
    st.add_argument("--t", type=float, required=True)
    st.add_argument("--edge", default="0", help="free edge (index or name)")
    st.add_argument("--evaluate", action="store_true", help="emit the tensor")
    return p


# io ------------------------------------------------------------------------------

def _read(path: str):
    try:
        text = sys.stdin.read() if path == "-" else open(path).read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    return codec.read(text)


def _inputs(args, count: int | None = 1) -> list:
    if count is not None and len(args.inputs) != count:
        raise UsageError(f"'{args.verb}' needs exactly {count} --in argument(s)")
    if not args.inputs:
        raise UsageError(f"'{args.verb}' needs --in")
    return [_read(p) for p in args.inputs]


def _write(obj, path: str):
    text = codec.write(obj)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _as_tensor(obj) -> CorrelationTensor:
    if isinstance(obj, CorrelationTensor):
        return obj
    if isinstance(obj, QuantumRealization):
        return born_evaluate(obj)
    if isinstance(obj, CertReport):
        raise UsageError("a report is not a tensor")
    return evaluate(obj)


def _as_model(obj) -> DiscreteNLocalModel:
    if isinstance(obj, DiscreteNLocalModel):
        return obj
    if isinstance(obj, CanonicalNLocalForm):
        return obj.to_model()
    raise UsageError(f"expected an n-local model, got {type(obj).__name__}")


def _as_canonical(obj) -> CanonicalNLocalForm:
    if isinstance(obj, CanonicalNLocalForm):
        return obj
    if isinstance(obj, DiscreteNLocalModel):
        return canonicalize(obj)
    raise UsageError(f"expected an n-local model, got {type(obj).__name__}")


# verbs ---------------------------------------------------------------------------

def _gen(args):
    ex = args.example
    if ex == "paper-2.1":
        return bell_local_nonbilocal()
    if ex == "paper-3.1":
        return perfectly_correlated_pt()
    if args.scenario is None:
        raise UsageError(f"--example {ex} needs --scenario")
    s = args.scenario
    if ex == "uniform":
        return uniform_ct(s)
    if ex == "deterministic":
        if args.strategies is None:
            raise UsageError("--example deterministic needs --strategies")
        return deterministic_ct(s, args.strategies)
    dims = args.dims or [2] * s.n
    if len(dims) != s.n:
        raise UsageError(f"--dims needs {s.n} sizes")
    return random_model(s, dims, np.random.default_rng(args.seed))


def _certify(args) -> CertReport:
    t = _as_tensor(_inputs(args)[0])
    parts = {}
    try:
        fac = factorization_check(t, args.hub, tol=args.tol)
        parts["factorization"] = fac
    except SignalingError as exc:
        fac = None
        parts["factorization"] = f"skipped: {exc}"
    lp = None
    if not args.no_lp:
        lp = bell_local_lp(t, tol=args.tol)
        parts["bell_local_lp"] = lp
    search = None
    if not args.no_search and fac is not None and fac.verdict is not Verdict.NECESSARY_FAIL \
            and (lp is None or lp.verdict is not Verdict.NOT_BELL_LOCAL):
        cfg = SearchConfig(restarts=args.restarts, max_iters=args.max_iters,
                           tol=args.search_tol, seed=args.seed)
        search = nlocal_search(t, cfg, factorization_tol=args.tol)
        parts["nlocal_search"] = search
    for rep in (fac, lp):
        if rep is not None and rep.verdict.is_negative:
            return CertReport(rep.verdict, rep.defect, None, parts)
    if search is not None and search.verdict is Verdict.NLOCAL_WITNESS:
        return CertReport(search.verdict, search.defect, search.witness, parts)
    if lp is not None:
        return CertReport(lp.verdict, lp.defect, lp.witness, parts)
    return CertReport(Verdict.UNKNOWN, fac.defect if fac else float("nan"), None, parts)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    log.info("nlocal %s verb=%s seed=%d tol=%g", __version__, args.verb,
             args.seed, args.tol)
    try:
        verb = args.verb
        if verb == "gen":
            out = _gen(args)
        elif verb == "eval":
            out = _as_tensor(_inputs(args)[0])
        elif verb == "canon":
            out = _as_canonical(_inputs(args)[0])
        elif verb == "expand":
            obj = _inputs(args)[0]
            out = obj if isinstance(obj, FullExpansion) else expand_full(_as_canonical(obj))
        elif verb == "realize":
            out = realize(_as_canonical(_inputs(args)[0]))
        elif verb == "born":
            obj = _inputs(args)[0]
            if not isinstance(obj, QuantumRealization):
                obj = realize(_as_canonical(obj))
            out = born_evaluate(obj)
        elif verb == "mix":
            ts = [_as_tensor(o) for o in _inputs(args, None)]
            if len(args.weights) != len(ts):
                raise UsageError("--weights needs one weight per --in")
            out = mix(list(zip(args.weights, ts)))
        elif verb == "path":
            mP, mQ = (_as_model(o) for o in _inputs(args, 2))
            log.info("t=%g", args.t)
            out = path_point(mP, mQ, args.t)
            if args.evaluate:
                out = evaluate(out)
        elif verb == "star":
            m = _as_model(_inputs(args)[0])
            edge = int(args.edge) if args.edge.isdigit() else args.edge
            log.info("t=%g edge=%s", args.t, args.edge)
            out = star_mix(m, edge, args.t)
            if args.evaluate:
                out = evaluate(out)
        else:  # certify
            log.info("restarts=%d max_iters=%d search_tol=%g hub=%s", args.restarts,
                     args.max_iters, args.search_tol, args.hub)
            out = _certify(args)
            log.info("verdict %s defect %.3g", out.verdict.value, out.defect)
        _write(out, args.out)
    except (UsageError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1
    if isinstance(out, CertReport) and out.verdict.is_negative:
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
