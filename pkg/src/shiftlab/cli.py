"""Command-line entry point.  Every report is JSON (sorted keys) embedding
the run configuration and library version; ``--csv`` writes plot tables.

Exit codes: 0 all checks pass, 1 a check failed (or a numerical
precondition did not hold), 2 input or parse error."""
import argparse
from dataclasses import dataclass, field, asdict
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import DEFAULT
from .errors import ShiftlabError, DomainError, InsufficientSupport

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    N: int = 128
    seed: int = 42
    format: str = "json"
    threads: int = 1
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 8:
            raise InputError("--N: truncation must be >= 8")
        if self.format not in ("json", "csv"):
            raise InputError("--format: must be json or csv")
        for k, v in self.tolerances.items():
            if not hasattr(DEFAULT, k):
                raise InputError(f"--tol: unknown tolerance {k!r}")
            if isinstance(v, (int, float)) and not v > 0:
                raise InputError(f"--tol: {k} must be positive")

    @property
    def cfg(self):
        return DEFAULT.with_(**self.tolerances)

    def to_dict(self):
        d = asdict(self)
        d["config"] = self.cfg.to_dict()
        return d


# input helpers ---------------------------------------------------------------------------

def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}") from None


def _load(path, builder, what):
    """builder(dict) -> object; missing fields and domain errors name the file."""
    d = _read_json(path) if not isinstance(path, dict) else path
    try:
        return builder(d)
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc.args[0]!r} for {what}") from None
    except (TypeError, ValueError, IndexError, DomainError) as exc:
        raise InputError(f"{path}: bad {what}: {exc}") from None


def _load_weight(path):
    from .weights import Weight
    if str(path).lower().endswith(".csv"):
        try:
            return Weight.load(path)
        except (OSError, KeyError, ValueError, DomainError) as exc:
            raise InputError(f"{path}: bad weight CSV (fields n, sigma|log_sigma): {exc}") from None
    return _load(path, Weight.from_dict, "weight (fields support, n_lo, log_values)")


def _load_series(path):
    from .series import CoeffVec
    return _load(path, CoeffVec.from_dict, "series (fields n_lo, coeffs)")


def _load_hyper(path):
    from .series import Hyperfunction
    return _load(path, Hyperfunction.from_dict, "hyperfunction (fields plus/minus or n_lo, coeffs)")


def _complex(s, flag):
    try:
        return complex(str(s).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise InputError(f"{flag}: cannot parse complex number {s!r}") from None


def _c(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (np.floating,)):
        return _finite(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj):
    return json.dumps(_finite(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


# subcommands ------------------------------------------------------------------------------

def cmd_weights(a, rc):
    from .weights import classify
    w = _load_weight(a.file)
    cfg = rc.cfg if a.window_min is None else rc.cfg.with_(min_window=a.window_min)
    avals = None
    if a.a:
        try:
            avals = tuple(float(x) for x in a.a.split(","))
        except ValueError:
            raise InputError(f"--a: expected comma-separated reals, got {a.a!r}") from None
    rep = classify(w, cfg, avals)
    return {"report": rep.to_dict(), "weight": {"support": w.support, "n_lo": w.n_lo, "n_hi": w.n_hi}}, {}, None


def cmd_series(a, rc):
    from .series import eval as s_eval, pair, convolve
    if a.action == "eval":
        f = _load_hyper(a.f)
        zs = [_complex(z, "--z") for z in a.z]
        try:
            vals = [_c(s_eval(f, z)) for z in zs]
        except DomainError as exc:
            raise InputError(f"--z: {exc}") from None
        return {"points": [_c(z) for z in zs], "values": vals}, {}, None
    f = _load_series(a.f)
    g = _load_series(a.g)
    if a.action == "pair":
        return {"pair": _c(pair(f, g))}, {}, None
    return {"convolution": convolve(f, g).to_dict()}, {}, None


def cmd_op(a, rc):
    from .operators import SpaceModel, power_norm, divide
    if a.action == "norm":
        sp = _load(a.space, lambda d: SpaceModel.from_dict(d), "space (fields weight, p, N, kind)")
        rep = power_norm(sp, a.op, a.m, rc.cfg)
        return {"op": a.op, "m": a.m, "report": rep.to_dict()}, {}, None
    f = _load_series(a.series)
    lam = _complex(a.lam, "--lambda")
    if abs(lam) >= 1:
        raise InputError("--lambda: |lambda| must be < 1")
    q = divide(f, lam)
    return {"lambda": _c(lam), "quotient": q.to_dict()}, {}, None


def cmd_growth(a, rc):
    from .growth import GrowthProfile, tail_weight, hypothesis_report, mm_dichotomy, summability_62
    prof = _load(a.profile, GrowthProfile.from_dict, "growth profile (field log_t_norms)")
    if not a.eps > 0:
        raise InputError("--eps: must be positive")
    res = tail_weight(prof, a.eps, a.nmax, rc.cfg, threads=rc.threads)
    n = np.arange(1, a.nmax + 1)
    summ = summability_62(-res.checked.log_at(-n), res.log_sigma[1:], rc.cfg)
    hyp = hypothesis_report(prof, res.plain, rc.cfg) if len(res.plain) >= rc.cfg.min_window else None
    out = {
        "eps": a.eps,
        "dichotomy": mm_dichotomy(prof, rc.cfg).verdict,
        "tail": {"n": res.n.tolist(), "log_sigma": res.log_sigma.tolist(), "log_r_opt": res.log_r_opt.tolist(),
                 "boundary": res.boundary.tolist()},
        "tail_weight": res.plain.to_dict(),
        "tail_weight_checked": res.checked.to_dict(),
        "classify_plain": res.report_plain.to_dict() if res.report_plain else None,
        "classify_checked": res.report_checked.to_dict() if res.report_checked else None,
        "summability": {"verdict": summ.verdict, "witness": summ.witness},
        "hypotheses": hyp,
    }
    table = ("n,log_sigma,log_r_opt", [(int(k), float(s), float(r)) for k, s, r in res.rows()])
    checks = {"radii_increase": bool(np.all(np.diff(res.log_r_opt[1:]) > 0))}
    return out, checks, table


def _disc_space(rc, N=None):
    from .weights import Weight
    from .operators import SpaceModel
    N = N or rc.N
    return SpaceModel(Weight.constant("Z+", 0, N), 2, N)


def cmd_subspace(a, rc):
    from .operators import SpaceModel
    from .subspaces import TruncSubspace, zero_set, division_check, glue_test
    g = _load_series(a.gen)
    if a.action == "check":
        sp = _load(a.space, SpaceModel.from_dict, "space (fields weight, p, N, kind)") if a.space else _disc_space(rc)
        M = TruncSubspace.from_generator(g, sp, rc.cfg)
        rng = np.random.default_rng(rc.seed)
        grid = np.sqrt(rng.uniform(0, 0.81, a.grid)) * np.exp(2j * np.pi * rng.uniform(size=a.grid))
        zs = zero_set(M, grid)
        rows = []
        for lam, z in zip(grid, zs):
            d = division_check(M, lam)
            rows.append({"lambda": _c(lam), "eval_norm": z["eval_norm"], "zero": bool(z["zero"]),
                         "has_division": d.has_division, "index": d.index, "residual": d.max_residual})
        out = {"rank": M.rank, "z_invariant": bool(M.z_invariant), "z_residual": M.z_residual, "grid": rows}
        table = ("re,im,eval_norm,zero,has_division,index",
                 [(r["lambda"][0], r["lambda"][1], r["eval_norm"], int(r["zero"]), int(r["has_division"]), r["index"])
                  for r in rows])
        return out, {"z_invariant": bool(M.z_invariant)}, table
    tail = _load_weight(a.tail)
    M = TruncSubspace.from_generator(g, _disc_space(rc, a.N_space or len(tail)), rc.cfg)
    rep = glue_test(M, tail, a.pmax)
    return {"glue": rep.to_dict()}, {"glue_residual": rep.max_residual <= 1e-8}, None


def cmd_factorize(a, rc):
    from .hyperlab import annulus_factorize, span_identity
    f = _load_hyper(a.hyper)
    if not 0 < a.r < 1:
        raise InputError("--r: need 0 < r < 1")
    res = annulus_factorize(f.laurent(), a.r, a.K, a.r0, rc.cfg)
    ang = span_identity(res, f.laurent())
    out = res.to_dict()
    out["span_angle"] = ang
    out["exp_h_len"] = len(res.exp_h)
    out.pop("K")
    out["K_used"] = res.K
    table = ("radius,max_error", [tuple(c) for c in res.circles])
    checks = {"residual": res.residual <= 1e-9, "span_identity": ang <= 1e-6}
    return out, checks, table


def _spiral(n, rmax=0.95):
    j = np.arange(n)
    return rmax * np.sqrt((j + 0.5) / n) * np.exp(1j * j * math.pi * (3 - math.sqrt(5)))


def cmd_dynkin(a, rc):
    from .hyperlab import RadialProfile, fit_phi, dynkin_extend, cauchy_transform, dbar_density
    from .series import laurent_eval
    h = _load_series(a.tail)
    if a.phi:
        phi = _load(a.phi, RadialProfile.from_dict, "radial profile (field kind)")
        equiv = None
    else:
        phi, rep = fit_phi(_load_weight(a.sigma_star), rc.cfg)
        equiv = rep.to_dict()
    grid = _spiral(a.grid)
    rows = []
    for lam in grid:
        D, L = dynkin_extend(h, phi, lam, rc.cfg)
        rows.append({"lambda": _c(lam), "D": _c(D), "L": _c(L)})
    mus = [1.5, 2.0, 4.0]
    rep_vals = cauchy_transform(lambda z: dbar_density(h, phi, z, rc.cfg), np.array(mus), edges=phi.edges, cfg=rc.cfg)
    repro = max(abs(v - complex(laurent_eval(h, m))) for v, m in zip(rep_vals, mus))
    out = {"phi": phi.to_dict(), "equivalence": equiv, "grid": rows, "reproduction_residual": repro}
    table = ("re,im,absD,absL", [(r["lambda"][0], r["lambda"][1], math.hypot(*r["D"]), math.hypot(*r["L"]))
                                 for r in rows])
    return out, {"reproduction": repro <= 1e-8}, table


def cmd_verify(a, rc):
    from .verify import run_suite, FAIL
    res = run_suite(rc.seed, rc.N, rc.cfg, a.only)
    for r in res:
        print(f"{r.status.upper():9s} {r.module:10s} {r.name} ({r.seconds:.2f}s)", file=sys.stderr)
    checks = {f"{r.module}.{r.name}": r.status != FAIL for r in res}
    out = {"checks": [r.to_dict() for r in res],
           "counts": {s: sum(r.status == s for r in res) for s in ("pass", "fail", "deviation")}}
    table = ("module,name,status,value,tol", [(r.module, r.name, r.status, r.value, r.tol) for r in res])
    return out, checks, table


COMMANDS = {"weights": cmd_weights, "series": cmd_series, "op": cmd_op, "growth": cmd_growth,
            "subspace": cmd_subspace, "factorize": cmd_factorize, "dynkin": cmd_dynkin, "verify": cmd_verify}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=128, help="truncation (>= 8)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--format", default="json", choices=["json", "csv"])
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help="override a Config tolerance")
    common.add_argument("--out", help="write the JSON report here (default stdout)")
    common.add_argument("--csv", help="write the plot table here")

    p = _Parser(prog="shiftlab", description="weighted shift laboratory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    w = sub.add_parser("weights", parents=[common])
    w.add_argument("action", choices=["classify"])
    w.add_argument("file")
    w.add_argument("--a", help="comma-separated exponents for the monotone test")
    w.add_argument("--window-min", type=int, dest="window_min")

    s = sub.add_parser("series", parents=[common])
    s.add_argument("action", choices=["eval", "pair", "convolve"])
    s.add_argument("--f", required=True)
    s.add_argument("--g", help="second series (pair, convolve)")
    s.add_argument("--z", action="append", default=[], help="evaluation point, e.g. 0.3+0.1i")

    o = sub.add_parser("op", parents=[common])
    o.add_argument("action", choices=["norm", "divide"])
    o.add_argument("--space")
    o.add_argument("--op", default="T", choices=["S", "T", "biS", "biS_inv"])
    o.add_argument("--m", type=int, default=1)
    o.add_argument("--series")
    o.add_argument("--lambda", dest="lam", default="0")

    g = sub.add_parser("growth", parents=[common])
    g.add_argument("action", choices=["report"])
    g.add_argument("--profile", required=True)
    g.add_argument("--eps", type=float, default=1.0)
    g.add_argument("--nmax", type=int, default=200)

    ss = sub.add_parser("subspace", parents=[common])
    ss.add_argument("action", choices=["check", "glue"])
    ss.add_argument("--gen", required=True)
    ss.add_argument("--space")
    ss.add_argument("--grid", type=int, default=50)
    ss.add_argument("--tail")
    ss.add_argument("--pmax", type=int, default=10)
    ss.add_argument("--space-N", type=int, dest="N_space")

    f = sub.add_parser("factorize", parents=[common])
    f.add_argument("--hyper", required=True)
    f.add_argument("--r", type=float, default=0.8)
    f.add_argument("--r0", type=float)
    f.add_argument("--K", type=int, default=1024)

    d = sub.add_parser("dynkin", parents=[common])
    d.add_argument("--tail", required=True, help="h as a series on negative indices")
    d.add_argument("--phi", help="radial profile JSON")
    d.add_argument("--sigma-star", dest="sigma_star", help="Z+ weight to fit phi to")
    d.add_argument("--grid", type=int, default=64)

    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--only", action="append", help="restrict to a module (repeatable)")
    return p


def _required(a, names):
    for n in names:
        if getattr(a, n, None) in (None, ""):
            raise InputError(f"--{n.replace('_', '-')}: required for {a.command} {getattr(a, 'action', '')}".strip())


def _tolerances(items):
    out = {}
    for it in items:
        if "=" not in it:
            raise InputError(f"--tol: expected NAME=VALUE, got {it!r}")
        k, v = it.split("=", 1)
        try:
            out[k] = type(getattr(DEFAULT, k))(float(v)) if hasattr(DEFAULT, k) else float(v)
        except ValueError:
            raise InputError(f"--tol: {k} needs a number, got {v!r}") from None
    return out


def _threads():
    v = os.environ.get("SHIFTLAB_THREADS", "1")
    try:
        return max(1, int(v))
    except ValueError:
        raise InputError(f"SHIFTLAB_THREADS: expected an integer, got {v!r}") from None


def _write_table(path, table, stream):
    header, rows = table
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header.split(","))
    for r in rows:
        wr.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        stream.write(buf.getvalue())


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    p = build_parser()
    try:
        a = p.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        rc = RunConfig(a.N, a.seed, a.format, _threads(), _tolerances(a.tol))
        need = {("series", "pair"): ["g"], ("series", "convolve"): ["g"], ("series", "eval"): ["z"],
                ("op", "norm"): ["space"], ("op", "divide"): ["series"], ("subspace", "glue"): ["tail"]}
        _required(a, need.get((a.command, getattr(a, "action", None)), []))
        if a.command == "dynkin" and not (a.phi or a.sigma_star):
            raise InputError("--phi or --sigma-star: one is required for dynkin")
        result, checks, table = COMMANDS[a.command](a, rc)
    except InputError as exc:
        print(f"shiftlab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InsufficientSupport as exc:
        print(f"shiftlab: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ShiftlabError as exc:
        report = {"command": a.command, "version": __version__, "run_config": rc.to_dict(),
                  "error": f"{type(exc).__name__}: {exc}", "checks": {}, "ok": False}
        _emit(report, a, stdout)
        print(f"shiftlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    ok = all(checks.values())
    report = {"command": a.command, "action": getattr(a, "action", None), "version": __version__,
              "run_config": rc.to_dict(), "result": result, "checks": checks, "ok": ok}
    _emit(report, a, stdout)
    if table is not None and (a.csv or rc.format == "csv"):
        _write_table(a.csv, table, stdout)
    return EXIT_OK if ok else EXIT_FAIL


def _emit(report, a, stdout):
    text = dumps(report)
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    elif a.format == "json":
        stdout.write(text)


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
