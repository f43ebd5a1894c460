"""Command-line front end: named scenarios, checks on JSON inputs, Werner sweeps.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
input errors. Reports are JSON on standard output; ``werner sweep`` prints CSV
unless ``--json`` is given.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels as C
from . import keb as K
from . import lab as L
from . import rand
from . import separability as SEP
from . import superchannels as S
from . import tensor as T
from .channels import Channel
from .errors import EbscError
from .separability import Verdict
from .superchannels import Supermap
from .tensor import DEFAULT_TOL, Tolerance


class UsageError(Exception):
    pass


@dataclass
class Report:
    scenario: str
    inputs: dict
    checks: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_time_ms: float | None = None

    def check(self, name: str, expected, computed, tol: float | None = None) -> bool:
        """Numeric checks pass when ``|computed - expected| <= tol``; others on equality."""
        if tol is None:
            ok = expected == computed
            residual = None
        else:
            residual = float(abs(computed - expected))
            ok = residual <= tol
        self.checks.append({"name": name, "expected": expected, "computed": computed,
                            "residual": residual, "pass": bool(ok)})
        return ok

    def verdict(self, name: str, v: Verdict):
        self.verdicts.append({"name": name, **v.summary()})

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        out = {"scenario": self.scenario, "inputs": self.inputs, "checks": self.checks,
               "verdicts": self.verdicts}
        out.update(self.extra)
        out["wall_time_ms"] = self.wall_time_ms
        return out


def _jsonable(x):
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return np.stack([x.real, x.imag], axis=-1).tolist()
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_jsonable, indent=2, sort_keys=False)


# -- demos -----------------------------------------------------------------------


def demo_non_decomposable(rep: Report, tol: Tolerance, seed):
    s = L.paper_example_ebsc()
    closed = L.paper_example_closed_form()
    res = float(np.linalg.norm(s.choi.data - T.permute_systems(closed, s.choi.names).data))
    rep.check("choi_matches_closed_form", 0.0, res, 1e-10)
    rep.extra["choi_shape"] = list(s.choi.data.shape)
    sc = S.is_superchannel(s, tol)
    rep.check("marginal_A1B0", 0.0, sc.marginal_a1b0, 1e-9)
    rep.check("marginal_A0A1B0", 0.0, sc.marginal_a0a1b0, 1e-9)
    v_ab = L.is_eb_supermap(s, tol)
    rep.verdict("A0A1:B0B1", v_ab)
    rep.check("A0A1:B0B1 separable", SEP.SEPARABLE, v_ab.outcome)
    if v_ab.certificate is not None:
        rep.check("certificate_verifies", True,
                  SEP.verify_product_decomposition(v_ab.certificate, s.choi, v_ab.cut, tol))
    for single in ("A0", "A1"):
        rest = tuple(n for n in s.choi.names if n != single)
        v = SEP.decide(s.choi, ((single,), rest), tol)
        rep.verdict(f"{single}:{','.join(rest)}", v)
        rep.check(f"{single} cut entangled", SEP.ENTANGLED, v.outcome)
    block = T.project_onto(s.choi, {"B0": 0, "B1": 0})
    lam = SEP.ppt(block, (("A0",), ("A1",)), tol)[1]
    oracle = float(np.linalg.eigvalsh(T.partial_transpose(block, ["A1"]).data)[0])
    rep.check("block_00_min_pt_eig", -0.25, lam, 1e-12)
    rep.check("block_00_min_pt_eig_oracle", lam, oracle, 1e-12)


def demo_superactivation(rep: Report, tol: Tolerance, seed):
    s = L.replacer_superchannel(2)
    v = L.is_eb_supermap(s, tol)
    rep.verdict("replacer A:B", v)
    rep.check("replacer separable", SEP.SEPARABLE, v.outcome)
    omega = L.superactivation_series(s, tol)
    rep.check("omega_trace", 1.0, float(omega.trace().real), 1e-12)
    vo = SEP.decide(omega, (("R1", "R1'"), ("B1'",)), tol)
    rep.verdict("omega R1R1':B1'", vo)
    rep.check("omega entangled", SEP.ENTANGLED, vo.outcome)
    oracle = float(np.linalg.eigvalsh(T.partial_transpose(omega, ["B1'"]).data)[0])
    rep.check("omega_min_pt_eig", -0.25, oracle, 1e-12)
    c, res = L.proportionality_residual(omega, L.superactivation_marginal(s))
    rep.extra["omega_scale"] = c
    rep.check("omega_proportional_to_marginal", 0.0, res, 1e-10)
    par = S.tensor(s, S.primed(s))
    vp = L.is_eb_supermap(par, tol)
    rep.verdict("parallel replacers A:B", vp)
    rep.check("parallel separable", SEP.SEPARABLE, vp.outcome)


def demo_replacer(rep: Report, tol: Tolerance, seed):
    s = L.replacer_superchannel(2)
    sc = S.is_superchannel(s, tol)
    rep.check("is_superchannel", True, bool(sc))
    gen = rand.rng(seed)
    ident = C.identity_channel(2, "B0", "B1")
    worst = 0.0
    for _ in range(5):
        e = rand.random_channel(gen, [("A0", 2)], [("A1", 2)])
        out = S.apply(s, e)
        worst = max(worst, T.inf_norm(out.choi.data - T.permute_systems(ident.choi, out.choi.names).data))
    rep.check("output_is_identity_channel", 0.0, worst, 1e-10)
    v = L.is_eb_supermap(s, tol)
    rep.verdict("replacer A:B", v)
    rep.check("replacer separable", SEP.SEPARABLE, v.outcome)


def _image_checks(rep: Report, theta: Supermap, e: Channel, target, tol: Tolerance):
    sc = S.is_superchannel(theta, tol)
    rep.check("marginal_A1B0", 0.0, sc.marginal_a1b0, 1e-9)
    rep.check("marginal_A0A1B0", 0.0, sc.marginal_a0a1b0, 1e-9)
    rep.check("choi_psd", True, sc.psd_ok)
    out = S.apply_with_side(theta, e)
    res = float(np.linalg.norm(out.choi.data - T.permute_systems(target, out.choi.names).data))
    rep.check("reproduces_target", 0.0, res, 1e-9)
    v = L.is_eb_supermap(theta, tol)
    rep.verdict("theta A:B", v)
    rep.check("theta not entangled", True, v.outcome != SEP.ENTANGLED)


def demo_cp_image(rep: Report, tol: Tolerance, seed):
    terms = L.random_sep_cptni_terms(rand.rng(seed), 2)
    theta, e = L.sep_cptni_to_ebsc(terms, tol=tol)
    _image_checks(rep, theta, e, L.sep_cptni_target(terms), tol)


def demo_locc2(rep: Report, tol: Tolerance, seed):
    gen = rand.rng(seed)
    lam = rand.random_instrument(gen, [("B0", 2)], [("B2", 2)], outcomes=2)
    gam = [rand.random_instrument(gen, [("R0", 2)], [("R1", 2)], outcomes=2) for _ in range(2)]
    fs = [[rand.random_channel(gen, [("B2", 2)], [("B1", 2)]) for _ in range(2)] for _ in range(2)]
    theta, e = L.locc2_to_cmpsc(lam, gam, fs, tol)
    _image_checks(rep, theta, e, L.locc2_target(lam, gam, fs).choi, tol)


def demo_schmidt_iteration(rep: Report, tol: Tolerance, seed):
    d, k, beta = 3, 2, 0.5
    rep.check("iteration_count", 2, K.iteration_count(d, k))
    lam = K.werner_channel(K.WernerParams(d, beta))
    v1 = C.is_eb(lam, tol)
    rep.verdict("Lambda EB", v1)
    rep.check("single channel not EB", SEP.ENTANGLED, v1.outcome)
    vk = K.is_k_ebc(lam, k, seed=seed, tol=tol)
    rep.verdict("Lambda 2-EB", vk)
    rep.check("single channel 2-EB", SEP.SEPARABLE, vk.outcome)
    m = K.iterate_concatenation(lam, K.iteration_count(d, k))
    x, y, res = K.isotropic_fit(m.choi)
    rep.extra["isotropic_coefficients"] = [x, y]
    rep.check("isotropic_residual", 0.0, res, 1e-9)
    v = K.isotropic_eb_verdict(m, tol)
    rep.verdict("Lambda o Lambda EB", v)
    rep.check("concatenation EB", SEP.SEPARABLE, v.outcome)


DEMOS = {
    "non-decomposable": demo_non_decomposable,
    "superactivation": demo_superactivation,
    "replacer": demo_replacer,
    "cp-image": demo_cp_image,
    "locc2": demo_locc2,
    "schmidt-iteration": demo_schmidt_iteration,
}


# -- other commands ------------------------------------------------------------------


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"file: {path} not found") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"file: invalid JSON at line {exc.lineno} column {exc.colno}") from None


def check_channel(rep: Report, args, tol: Tolerance):
    ch = Channel.from_dict(_load_json(args.file))
    rep.check("cp", True, ch.is_cp(tol))
    rep.check("tp_residual", 0.0, ch.tp_residual(), tol.eps_tp)
    cut = SEP.parse_cut(args.cut) if args.cut else (ch.in_labels, ch.out_labels)
    v = SEP.decide(ch.choi, cut, tol)
    rep.verdict(f"{','.join(cut[0])}:{','.join(cut[1])}", v)


def check_superchannel(rep: Report, args, tol: Tolerance):
    s = Supermap.from_dict(_load_json(args.file))
    sc = S.is_superchannel(s, tol)
    rep.extra["superchannel"] = sc.to_dict()
    rep.check("choi_psd", True, sc.psd_ok)
    rep.check("marginal_A1B0", 0.0, sc.marginal_a1b0, tol.eps_eq)
    rep.check("marginal_A0A1B0", 0.0, sc.marginal_a0a1b0, tol.eps_eq)
    if args.cut:
        cut = SEP.parse_cut(args.cut)
        v = SEP.decide(s.choi, cut, tol, decomposition=s.terms)
    else:
        v = L.is_eb_supermap(s, tol)
    rep.verdict(f"{','.join(v.cut[0])}:{','.join(v.cut[1])}", v)


def keb_test(rep: Report, args, tol: Tolerance):
    d, k, beta = args.d, args.k, args.beta
    v = K.is_k_ebc(K.werner_channel(K.WernerParams(d, beta)), k, args.samples, args.seed, tol)
    rep.verdict(f"Werner {k}-EB", v)
    expected = SEP.SEPARABLE if beta <= K.k_ebc_threshold(d, k) else SEP.ENTANGLED
    rep.extra["threshold"] = K.k_ebc_threshold(d, k)
    rep.check("verdict_matches_threshold", expected, v.outcome)


def werner_sweep(rep: Report, args, tol: Tolerance) -> list[dict]:
    betas = K.parse_range(args.beta)
    threshold = K.k_ebc_threshold(args.d, args.k)
    rows = K.threshold_sweep(args.d, args.k, betas, args.samples, args.seed, tol)
    for r in rows:
        expected = SEP.SEPARABLE if r["beta"] <= threshold + 1e-12 else SEP.ENTANGLED
        rep.check(f"beta={r['beta']!r}", expected, r["verdict"])
    rep.extra["threshold"] = threshold
    rep.extra["rows"] = rows
    return rows


# -- argument parsing ----------------------------------------------------------------


def _globals(parser: argparse.ArgumentParser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--tol", type=float, default=default(None), help="uniform tolerance override")
    parser.add_argument("--json", action="store_true", default=default(False), help="JSON report for sweeps")
    parser.add_argument("--csv", metavar="PATH", default=default(None), help="also write sweep CSV to PATH")
    parser.add_argument("--seed", type=int, default=default(0), help="random seed")
    parser.add_argument("--timing", action="store_true", default=default(False),
                        help="record wall time (makes output nondeterministic)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ebsc", description=__doc__.splitlines()[0])
    _globals(p, suppress=False)
    leaf = argparse.ArgumentParser(add_help=False)
    _globals(leaf, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", parents=[leaf], help="run a named scenario")
    demo.add_argument("scenario", choices=sorted(DEMOS))

    werner = sub.add_parser("werner", help="Werner channel family")
    wsub = werner.add_subparsers(dest="action", required=True)
    sweep = wsub.add_parser("sweep", parents=[leaf], help="k-EB verdicts over a beta grid")
    sweep.add_argument("--d", type=int, required=True)
    sweep.add_argument("--k", type=int, required=True)
    sweep.add_argument("--beta", required=True, metavar="A:B:STEP")
    sweep.add_argument("--samples", type=int, default=200)

    check = sub.add_parser("check", help="validate a JSON channel or superchannel")
    csub = check.add_subparsers(dest="kind", required=True)
    for kind in ("channel", "superchannel"):
        c = csub.add_parser(kind, parents=[leaf])
        c.add_argument("--file", required=True)
        c.add_argument("--cut", help="e.g. A0,A1:B0,B1")

    kebp = sub.add_parser("keb", help="k-entanglement-breaking tests")
    ksub = kebp.add_subparsers(dest="action", required=True)
    kt = ksub.add_parser("test", parents=[leaf], help="k-EB verdict for one Werner channel")
    kt.add_argument("--d", type=int, required=True)
    kt.add_argument("--k", type=int, required=True)
    kt.add_argument("--beta", type=float, required=True)
    kt.add_argument("--samples", type=int, default=200)

    fx = sub.add_parser("fixtures", parents=[leaf], help="export superchannel fixtures as JSON")
    fx.add_argument("--out", required=True)
    return p


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    tol = DEFAULT_TOL if args.tol is None else Tolerance.uniform(args.tol)
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("timing", "json", "csv")}
    start = time.perf_counter()
    rows = None
    try:
        if args.command == "demo":
            rep = Report(f"demo {args.scenario}", inputs)
            DEMOS[args.scenario](rep, tol, args.seed)
        elif args.command == "werner":
            rep = Report("werner sweep", inputs)
            rows = werner_sweep(rep, args, tol)
        elif args.command == "check":
            rep = Report(f"check {args.kind}", inputs)
            (check_channel if args.kind == "channel" else check_superchannel)(rep, args, tol)
        elif args.command == "keb":
            rep = Report("keb test", inputs)
            keb_test(rep, args, tol)
        else:
            rep = Report("fixtures", inputs)
            manifest = L.export_fixtures(args.out, args.seed)
            rep.extra["manifest"] = str(manifest)
    except (UsageError, EbscError, ValueError) as exc:
        print(f"ebsc: error: {exc}", file=stderr)
        return 2
    if args.timing:
        rep.wall_time_ms = (time.perf_counter() - start) * 1e3
    if rows is not None:
        text = K.sweep_csv(rows)
        if args.csv:
            Path(args.csv).write_text(text)
        if not args.json:
            stdout.write(text)
            return 0 if rep.passed else 1
    stdout.write(dumps(rep.to_dict()) + "\n")
    return 0 if rep.passed else 1


def main() -> None:
    sys.exit(run())
