"""Command line interface: ``fermisig <command> [options]``.

Exit codes: 0 success, 1 a verification check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .dirac import QuadratureSpec, conservation_check, evolve_massive, group_property_defect, reference_datum, slice_norm
from .errors import FermisigError, OutputError
from .geometry import ConformalDomain, GraphDomain, SimpleDomain, Beam, volume
from .inverse import (
    bound_spacelike,
    bound_timelike,
    cauchy_curve,
    isospectral_pair,
    reconstruct_volume_density,
    spacelike_test_curves,
    timelike_test_curves,
)
from .report import FORMATS, ReportDocument, emit_report, to_json
from .sigop import (
    build_conformal,
    build_flat_massless,
    build_massive_kernel,
    build_simple,
    localized_hs_norm,
)
from .specfile import load_domain_spec
from .spectral import (
    chiral_index,
    decay_bound_report,
    spectrum,
    trace_of_power,
    trace_power,
    trace_s2_massive_mc,
    trace_s4_candidates,
    trace_theta_mc,
)

COMMANDS = ("spectrum", "traces", "verify", "isospectral", "reconstruct", "cauchy")
FOUR_PI = 4 * np.pi


class InputError(FermisigError):
    pass


def _interval(text):
    try:
        a, b = (float(s) for s in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected A,B, got {text!r}") from exc
    return (a, b)


def _formats(text):
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s) {bad}; choose from {FORMATS}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermisig", description="Fermionic signature operator toolkit")
    p.add_argument("--version", action="version", version=f"fermisig {__version__}")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--spec", metavar="FILE", help="domain spec (JSON)")
    src.add_argument("--simple", metavar="FILE", help="domain spec that must be of kind simple")
    src.add_argument("--graph", metavar="FILE", help="domain spec that must be of kind graph")
    src.add_argument("--conformal", metavar="FILE", help="domain spec that must be of kind conformal")
    p.add_argument("--n", type=int, default=256, help="grid cells on the Cauchy segment")
    p.add_argument("--mass", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--delta", type=float, default=0.01, help="isospectral determinant parameter")
    p.add_argument("--time", type=float, default=0.25, help="evolution time for cauchy")
    p.add_argument("--interval-left", type=_interval, metavar="A,B")
    p.add_argument("--interval-right", type=_interval, metavar="A,B")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--out", metavar="DIR", help="write report files here instead of printing JSON")
    p.add_argument("--format", type=_formats, default=["json"], help="comma list of json,csv,svg")
    return p


# ------------------------------------------------------------------ helpers

def _load(args):
    for kind in ("spec", "simple", "graph", "conformal"):
        path = getattr(args, kind)
        if path is None:
            continue
        spec = load_domain_spec(path)
        if kind != "spec" and spec.kind != kind:
            raise InputError(f"--{kind} expects a {kind} spec, file has kind {spec.kind}")
        return spec
    return None


def _need_spec(args, spec):
    if spec is None:
        raise InputError(f"{args.command} needs a domain (--spec/--simple/--graph/--conformal)")
    return spec


def _operator(d, args):
    if isinstance(d, SimpleDomain) and args.mass == 0:
        return build_simple(d)
    if isinstance(d, ConformalDomain):
        if args.mass:
            raise InputError("massive operators on conformal domains are not supported")
        return build_conformal(d, args.n)
    if args.mass > 0:
        return build_massive_kernel(d, args.mass, args.n, QuadratureSpec())
    return build_flat_massless(d, args.n)


def _echo(args, spec):
    inputs = {"command": args.command, "n": args.n, "mass": args.mass, "samples": args.samples,
              "seed": args.seed, "q": args.q, "window": args.window}
    if args.command == "isospectral":
        inputs["delta"] = args.delta
    if args.command == "cauchy":
        inputs["time"] = args.time
    if args.interval_left:
        inputs["interval_left"] = list(args.interval_left)
    if args.interval_right:
        inputs["interval_right"] = list(args.interval_right)
    if spec is not None:
        inputs["domain"] = {"schema_version": spec.schema_version, **spec.payload}
    return inputs


def _spectrum_results(rep):
    return {"pairing_defect": rep.pairing_defect, "traces": {str(k): v for k, v in rep.traces.items()},
            "positive_trace": rep.positive_trace, "index": rep.index,
            "largest_eigenvalue": float(np.max(rep.eigenvalues)) if len(rep.eigenvalues) else 0.0}


def _is_triangle(d):
    if not isinstance(d, GraphDomain):
        return False
    xs = np.linspace(0, d.b, 101)
    return (np.allclose(d.t_minus(xs), 0.0)
            and np.allclose(d.t_plus(xs), np.minimum(xs, d.b - xs), atol=1e-12))


# ------------------------------------------------------------------ commands

def cmd_spectrum(args, spec, doc):
    d = _need_spec(args, spec).domain
    rep = spectrum(_operator(d, args))
    doc.eigenvalues = rep.eigenvalues.tolist()
    doc.results.update(_spectrum_results(rep))


def cmd_traces(args, spec, doc):
    d = _need_spec(args, spec).domain
    op = _operator(d, args)
    doc.seeds["monte_carlo"] = args.seed
    tp = trace_power(op, args.q)
    doc.results["matrix"] = {"q": args.q, "eigen_sum": tp.eigen, "matrix_power": tp.matrix}
    if args.mass > 0:
        mc = trace_s2_massive_mc(d, args.mass, args.samples, args.seed)
        doc.results["massive_s2"] = {"estimate": mc.value, "stderr": mc.stderr,
                                     "volume_term": mc.volume_term, "m2_term": mc.m2_term,
                                     "m4_term": mc.m4_term, "large_mass_term": mc.large_m_term}
        return
    est = trace_theta_mc(d, args.q, args.samples, args.seed)
    doc.results["theta_mc"] = {"q": args.q, "estimate": est.value, "stderr": est.stderr,
                               "accepted": est.accepted}
    if args.q == 2:
        cands = trace_s4_candidates(d, args.samples, args.seed)
        doc.results["s4_candidates"] = {k: {"estimate": v.value, "stderr": v.stderr} for k, v in cands.items()}
        ref = tp.eigen
        doc.results["s4_consistency"] = {
            k: bool(abs(v.value - ref) <= 3 * v.stderr + 0.02 * abs(ref)) for k, v in cands.items()}
        printed = cands["causal_1_over_8pi4"]
        doc.results["printed_coefficient"] = {
            "form": "1/(8 pi^4) over causal pairs", "estimate": printed.value,
            "matrix_value": ref, "consistent_with_matrix": doc.results["s4_consistency"]["causal_1_over_8pi4"]}


def cmd_verify(args, spec, doc):
    spec = _need_spec(args, spec)
    d = spec.domain
    op = _operator(d, args)
    rep = spectrum(op)
    doc.eigenvalues = rep.eigenvalues.tolist()
    doc.results.update(_spectrum_results(rep))
    lam_max = float(np.max(np.abs(rep.eigenvalues))) if len(rep.eigenvalues) else 0.0
    massive = args.mass > 0
    sym_tol = 1e-12 if not massive else 5 * max(op.symmetrization_defect,
                                                 op.n * np.finfo(float).eps * lam_max)
    doc.add_check("spectrum symmetric about the origin", rep.pairing_defect <= sym_tol,
                  rep.pairing_defect, sym_tol)
    odd = trace_of_power(op, 3)
    odd_tol = max(len(rep.eigenvalues) * rep.pairing_defect * lam_max ** 2, 1e-15)
    doc.add_check("odd traces vanish", abs(odd.eigen) <= odd_tol, odd.eigen, odd_tol)
    if not massive:
        mu = (volume(d, method="grid", samples=4_000_000) if isinstance(d, ConformalDomain)
              else volume(d))
        target = mu / (4 * np.pi ** 2)
        rel = abs(rep.traces[2] - target) / target
        tol = 1e-12 if isinstance(d, SimpleDomain) else 0.02
        doc.add_check("tr S^2 equals volume/4pi^2", rel <= tol, rel, tol)
        doc.add_check("chiral index vanishes", chiral_index(op) == 0, chiral_index(op), 0)
    else:
        mc = trace_s2_massive_mc(d, args.mass, args.samples, args.seed)
        doc.seeds["monte_carlo"] = args.seed
        gap = abs(rep.traces[2] - mc.value)
        tol = max(3 * mc.stderr, 0.02 * mc.value)
        doc.add_check("massive tr S^2 matches its pair integral", gap <= tol, gap, tol)
    if isinstance(d, SimpleDomain) and not massive:
        curves = timelike_test_curves(d)
        worst_t = min(bound_timelike(rep, c, d).margin for c in curves)
        sp = spacelike_test_curves(d) + [cauchy_curve(d)]
        worst_s = min(bound_spacelike(rep, c, d).margin for c in sp)
        doc.add_check("largest eigenvalue bounds timelike lengths", worst_t >= -1e-9, worst_t, -1e-9)
        doc.add_check("positive trace bounds spacelike lengths", worst_s >= -1e-9, worst_s, -1e-9)
    elif not isinstance(d, ConformalDomain):
        c = cauchy_curve(d)
        m = bound_spacelike(rep, c, d).margin
        doc.add_check("positive trace bounds the Cauchy segment length", m >= -0.01 * d.b / FOUR_PI,
                      m, -0.01 * d.b / FOUR_PI)
    if isinstance(d, GraphDomain) or (isinstance(d, SimpleDomain) and massive):
        br = decay_bound_report(rep, d, args.mass)
        doc.add_check("eigenvalue decay |lambda_n| <= c b / n", br.holds, br.worst, -br.tolerance,
                      f"c = {br.c}")
    if _is_triangle(d) and not massive:
        lam = np.sort(np.abs(rep.eigenvalues))[::-1]
        b = d.b
        exceptions = 0
        hard = 0
        for k in range(5, min(40, lam.size) + 1):
            lo = b / (8 * np.pi ** 2) * 4 / (k + 3)
            hi = b / (8 * np.pi ** 2) * 4 / (k - 4)
            # |lambda_n| counts both signs, so each magnitude appears twice
            v = lam[k - 1]
            if not lo <= v <= hi:
                exceptions += 1
                if not (0.97 * lo <= v <= 1.03 * hi):
                    hard += 1
        doc.add_check("triangle eigenvalue window", exceptions <= 2 and hard == 0, exceptions, 2)


def cmd_isospectral(args, spec, doc):
    pair = isospectral_pair(args.delta)
    doc.eigenvalues = [float(v) for v in pair.spectra[0]]
    doc.results.update({
        "params_T": list(pair.params_T), "params_Ttilde": list(pair.params_Ttilde),
        "spectrum_T": list(pair.spectra[0]), "spectrum_Ttilde": list(pair.spectra[1]),
        "spectral_gap": pair.spectral_gap, "charpoly_gap": pair.charpoly_gap,
        "asymptotic_a": pair.asymptotic_a, "a_offset": pair.a_offset,
        "cauchy_lengths": list(pair.spacelike_lengths),
        "cauchy_lengths_matrix_units": list(pair.spacelike_lengths_matrix_units),
        "widths_T": pair.domain_T.widths.tolist(), "widths_Ttilde": pair.domain_Ttilde.widths.tolist(),
    })
    doc.add_check("isospectral to 1e-10", pair.spectral_gap <= 1e-10, pair.spectral_gap, 1e-10)


def cmd_reconstruct(args, spec, doc):
    d = _need_spec(args, spec).domain
    if isinstance(d, SimpleDomain):
        op = build_flat_massless(d, args.n)
    else:
        op = _operator(d, args)
    field = reconstruct_volume_density(op, args.window, d)
    doc.results["sup_relative_error"] = field.sup_error
    doc.results["indicator_agreement"] = field.indicator_agreement()
    doc.results["recovered_volume"] = field.total_volume(d.b)
    doc.density = {"t": field.t, "x": field.x, "values": field.values}
    if args.interval_left and args.interval_right:
        hs = localized_hs_norm(op, args.interval_left, args.interval_right)
        beam = Beam(args.interval_left, args.interval_right)
        method = "grid" if isinstance(d, ConformalDomain) else "exact"
        mu = volume(d, beam, method=method, samples=4_000_000)
        doc.results["localized_hs_norm"] = hs
        doc.results["beam_volume_over_8pi2"] = mu / (8 * np.pi ** 2)


def cmd_cauchy(args, spec, doc):
    b = spec.domain.b if spec is not None else 1.0
    quad = QuadratureSpec()
    psi0 = reference_datum(args.n, b)
    psi = evolve_massive(psi0, args.time, args.mass, quad)
    drift, est = conservation_check(args.mass, args.time, args.n, b, quad)
    half = 0.5 * args.time
    doc.results.update({
        "initial_norm": slice_norm(psi0), "evolved_norm": slice_norm(psi),
        "conservation_drift": drift, "conservation_error_estimate": est,
        "group_property_defect": group_property_defect(args.mass, half, half, args.n, b, quad),
    })
    doc.add_check("slice norm conserved within 5x the refinement estimate",
                  drift <= 5 * est + 1e-14, drift, 5 * est)


DISPATCH = {"spectrum": cmd_spectrum, "traces": cmd_traces, "verify": cmd_verify,
            "isospectral": cmd_isospectral, "reconstruct": cmd_reconstruct, "cauchy": cmd_cauchy}


def run_command(args, spec=None) -> ReportDocument:
    doc = ReportDocument(args.command, _echo(args, spec))
    DISPATCH[args.command](args, spec, doc)
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n < 8:
        parser.error("--n must be at least 8")
    try:
        spec = _load(args)
        doc = run_command(args, spec)
    except (FermisigError, OSError) as exc:
        if isinstance(exc, OutputError):
            raise
        print(f"fermisig {args.command}: {exc}", file=sys.stderr)
        return 2
    if args.out:
        try:
            for path in emit_report(doc, args.format, args.out):
                print(path)
        except OutputError as exc:
            print(f"fermisig {args.command}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(to_json(doc))
    return 1 if doc.checks and not doc.passed else 0


if __name__ == "__main__":
    sys.exit(main())
