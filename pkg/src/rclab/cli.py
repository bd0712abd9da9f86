"""Command line driver: ``rclab {verify,exact,scan,curve,tree,bp}``.

Exit status is 0 when everything checked out, 1 when a verification failed
or belief propagation never converged, and 2 for parameter, budget and input
errors.  Every flag can also be given in a ``--config`` file of ``key = value``
lines; flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import parallel
from .bethe import bethe_max, tree_pressure_mc
from .errors import (
    GraphError,
    InconsistentMarginals,
    NoConvergedRun,
    NonConvergence,
    RCLabError,
)
from .exact import (
    EIsingParams,
    RCParams,
    potts_partition,
    rank2_partition,
    rc_partition,
    reduction_rhs,
    sandwich_check,
    two_spin_partition,
)
from .graphs import (
    Deterministic,
    Graph,
    OffspringSpec,
    Tabulated,
    cyclic_components_max,
    gen_random_graph,
    gen_random_regular,
    gen_random_tree,
    read_graph,
    regular_tree_spec,
)
from .mapping import assemble_identities, rc_to_eising, rc_to_two_spin
from .rng import stream

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITES = ("sandwich", "identities", "bethe", "regular", "all")
DEFAULT_TRIALS = {"sandwich": 200, "identities": 100, "bethe": 50}


# -- configuration ------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str = ""
    suite: Optional[str] = None
    q: Optional[float] = None
    w: Optional[float] = None
    B: Optional[float] = None
    beta: Optional[float] = None
    k: Optional[float] = None
    h: Optional[float] = None
    d: Optional[int] = None
    graph: Optional[str] = None
    gen: Optional[str] = None
    seed: int = 0
    trials: Optional[int] = None
    depth: Optional[int] = None
    samples: int = 2000
    restarts: int = 4
    w_grid: Optional[str] = None
    B_grid: Optional[str] = None
    out: Optional[str] = None
    format: Optional[str] = None
    figure: Optional[str] = None
    tol: Optional[float] = None

    def to_text(self) -> str:
        lines = [f"{k} = {_fmt_value(v)}" for k, v in asdict(self).items() if v is not None]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(**{k: _convert(k, v) for k, v in parse_config_text(text).items()})


_TYPES: dict[str, Callable[[str], Any]] = {}
for _f in fields(RunConfig):
    _t = str(_f.type)
    _TYPES[_f.name] = float if "float" in _t else int if "int" in _t else str


def _convert(key: str, raw: str) -> Any:
    if key not in _TYPES:
        raise ValueError(f"unknown configuration key {key!r}")
    return _TYPES[key](raw)


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _TYPES:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = val
    return out


def _fmt_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


# -- output -------------------------------------------------------------------------

def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_csv(rows: list[dict], columns: list[str], trailer: str = "") -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow(["" if r.get(c) is None else _fmt_value(r[c]) for c in columns])
    return buf.getvalue() + trailer


def render_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_table(cfg: RunConfig, rows: list[dict], columns: list[str], default: str, extra: dict | None = None) -> None:
    fmt = cfg.format or default
    if fmt == "csv":
        trailer = "".join(f"# {k}={_fmt_value(v)}\n" for k, v in (extra or {}).items())
        _emit(cfg, render_csv(rows, columns, trailer))
    elif extra:
        _emit(cfg, render_json({"rows": rows, **extra}))
    else:
        _emit(cfg, render_json(rows))


def _emit_record(cfg: RunConfig, rec: dict) -> None:
    if (cfg.format or "json") == "csv":
        flat = {k: v for k, v in rec.items() if not isinstance(v, (dict, list, tuple))}
        _emit(cfg, render_csv([flat], list(flat)))
    else:
        _emit(cfg, render_json(rec))


# -- inputs -------------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:count`` -> inclusive linspace."""
    try:
        lo, hi, num = text.split(":")
        return np.linspace(float(lo), float(hi), int(num))
    except ValueError:
        raise ValueError(f"grid must look like lo:hi:count, got {text!r}") from None


def _law(tok: str):
    if tok.startswith("reg"):
        return None, int(tok[3:])
    if tok.startswith("det"):
        return Deterministic(int(tok[3:])), None
    if tok.startswith("tab"):
        return Tabulated(tuple(float(x) for x in tok[3:].split("/"))), None
    raise ValueError(f"unknown offspring law {tok!r}")


def parse_gw(text: str) -> tuple[OffspringSpec, Optional[int]]:
    """``[gw:]LAW[@ROOTLAW][,DEPTH]`` with LAW one of regD, detC, tabP0/P1/...."""
    body = text[3:] if text.startswith("gw:") else text
    depth = None
    if "," in body:
        body, dtext = body.rsplit(",", 1)
        depth = int(dtext)
    interior_tok, _, root_tok = body.partition("@")
    law, d = _law(interior_tok)
    if d is not None:
        if root_tok:
            raise ValueError("regD already fixes the root law")
        return regular_tree_spec(d), depth
    root = _law(root_tok)[0] if root_tok else law
    return OffspringSpec(root, law), depth


def load_graph(cfg: RunConfig) -> Graph:
    if cfg.graph and cfg.gen:
        raise ValueError("give either --graph or --gen, not both")
    if cfg.graph:
        return read_graph(cfg.graph)
    if not cfg.gen:
        raise ValueError("a graph source is required (--graph FILE or --gen SPEC)")
    kind, _, rest = cfg.gen.partition(":")
    nums = [int(x) for x in rest.split(",")] if rest else []
    if kind == "regular" and len(nums) == 2:
        return gen_random_regular(nums[0], nums[1], cfg.seed)
    if kind == "gnm" and len(nums) == 2:
        return gen_random_graph(nums[0], nums[1], cfg.seed)
    if kind == "tree" and len(nums) == 1:
        return gen_random_tree(nums[0], cfg.seed)
    raise ValueError(f"unknown graph generator {cfg.gen!r}")


def _need(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise ValueError("missing parameter(s): " + ", ".join("--" + n for n in missing))


# -- verification suites ------------------------------------------------------------

CASE_COLUMNS = ["suite", "case", "check", "n", "m", "q", "w", "B", "value", "reference", "residual", "passed"]


def _case(suite, case, check, value, reference, tol, g=None, q=None, w=None, B=None, one_sided=False):
    resid = value - reference if one_sided else abs(value - reference)
    passed = resid <= tol if one_sided else resid < tol
    return dict(
        suite=suite, case=case, check=check, n=g.n if g else None, m=g.m if g else None,
        q=q, w=w, B=B, value=value, reference=reference, residual=resid, passed=bool(passed),
    )


def _draw_graph(rng: np.random.Generator, n_lo: int, n_hi: int, m_cap: int) -> Graph:
    n = int(rng.integers(n_lo, n_hi + 1))
    m = int(rng.integers(0, min(m_cap, n * (n - 1) // 2) + 1))
    return gen_random_graph(n, m, int(rng.integers(2**62)))


def suite_sandwich(cfg: RunConfig) -> list[dict]:
    eps = cfg.tol if cfg.tol is not None else 1e-9

    def trial(i: int) -> list[dict]:
        rng = stream(cfg.seed, 1, i)
        g = _draw_graph(rng, 2, 10, 20)
        q = cfg.q if cfg.q is not None else float(rng.uniform(2, 6))
        w = cfg.w if cfg.w is not None else float(rng.uniform(0, 5))
        B = cfg.B if cfg.B is not None else float(rng.uniform(0, 3))
        rep = sandwich_check(g, RCParams(q, w, B), eps)
        return [
            _case("sandwich", i, "lower", rep.log_z2, rep.log_z, eps, g, q, w, B, one_sided=True),
            _case("sandwich", i, "upper", rep.log_z, rep.log_z2 + rep.log_bound_gap, eps, g, q, w, B, one_sided=True),
        ]

    return [r for rows in parallel.pmap(trial, range(_trials(cfg, "sandwich"))) for r in rows]


def suite_identities(cfg: RunConfig) -> list[dict]:
    tol = cfg.tol if cfg.tol is not None else 1e-10

    def trial(i: int) -> list[dict]:
        rng = stream(cfg.seed, 2, i)
        g = _draw_graph(rng, 1, 8, 14)
        q = cfg.q if cfg.q is not None else float(rng.uniform(1.05, 6))
        w = cfg.w if cfg.w is not None else float(rng.uniform(0, 5))
        B = cfg.B if cfg.B is not None else float(rng.uniform(0, 3))
        rows = []
        res = assemble_identities(g, q, w, B)
        rows.append(_case("identities", i, "z2_eising", res.eising_residual, 0.0, tol, g, q, w, B))
        rows.append(_case("identities", i, "z2_two_spin", res.two_spin_residual, 0.0, tol, g, q, w, B))
        p = RCParams(q, w, B)
        rows.append(_case("identities", i, "reduction", reduction_rhs(g, p), rc_partition(g, p), tol, g, q, w, B))
        p2 = RCParams(2.0, w, B)
        rows.append(_case("identities", i, "q2", rank2_partition(g, p2), rc_partition(g, p2), tol, g, 2.0, w, B))
        t = gen_random_tree(g.n, int(rng.integers(2**62)))
        rows.append(_case("identities", i, "forest", rank2_partition(t, p), rc_partition(t, p), tol, t, q, w, B))
        qi = int(rng.integers(2, 5))
        pz = potts_partition(g, qi, math.log1p(w), B)
        rows.append(_case("identities", i, "potts", pz, B * g.n + rc_partition(g, RCParams(qi, w, B)), tol, g, qi, w, B))
        return rows

    return [r for rows in parallel.pmap(trial, range(_trials(cfg, "identities"))) for r in rows]


def suite_bethe(cfg: RunConfig) -> list[dict]:
    tol = cfg.tol if cfg.tol is not None else 1e-8

    def trial(i: int) -> list[dict]:
        rng = stream(cfg.seed, 3, i)
        q = cfg.q if cfg.q is not None else float(rng.uniform(2, 6))
        w = cfg.w if cfg.w is not None else float(rng.uniform(0, 3))
        B = cfg.B if cfg.B is not None else float(rng.uniform(0, 3))
        ws = rc_to_two_spin(q, w, B)
        n = int(rng.integers(3, 11))
        m = int(rng.integers(n, min(n + 6, n * (n - 1) // 2) + 1))
        g = gen_random_graph(n, m, int(rng.integers(2**62)))
        rows = []
        try:
            res = bethe_max(g, ws, restarts=2, seed=int(rng.integers(2**62)))
            log_z2 = two_spin_partition(g, ws)
            log_z = rc_partition(g, RCParams(q, w, B))
            rows.append(_case("bethe", i, "bethe_below_z2", res.log_zb, log_z2, tol, g, q, w, B, one_sided=True))
            rows.append(_case("bethe", i, "bethe_below_z", res.log_zb, log_z, tol, g, q, w, B, one_sided=True))
        except NoConvergedRun:
            pass  # the bound concerns converged fixed points only
        t = gen_random_tree(int(rng.integers(2, 13)), int(rng.integers(2**62)))
        res = bethe_max(t, ws, restarts=1, seed=i)
        rows.append(_case("bethe", i, "tree_exact", res.log_zb, two_spin_partition(t, ws), tol, t, q, w, B))
        return rows

    return [r for rows in parallel.pmap(trial, range(_trials(cfg, "bethe"))) for r in rows]


def suite_regular(cfg: RunConfig) -> list[dict]:
    from . import regular as rg

    rows = []
    add = lambda check, v, ref, tol, **kw: rows.append(_case("regular", len(rows), check, v, ref, tol, **kw))
    for z in np.linspace(-2.0, 2.0, 9):
        add("phi_ising_beta0", rg.phi_ising(0.0, float(z), 3), math.log(2 * math.cosh(z)), 1e-9)
    for q, B, d in [(2.0, 0.0, 3), (3.0, 0.5, 3), (4.0, 1.5, 4), (5.0, 3.0, 5)]:
        add("phi_rc_w0", rg.phi_rc_regular(q, 0.0, B, d), math.log1p((q - 1) * math.exp(-B)), 1e-9, q=q, w=0.0, B=B)
    for beta, z in [(0.3, 0.2), (0.7, 0.4), (0.9, -0.5)]:
        h = 1e-4
        fd = (rg.phi_ising(beta, z + h, 3) - rg.phi_ising(beta, z - h, 3)) / (2 * h)
        add("envelope_z", fd, 2 * rg.maximize_G(beta, z, 3).t_star - 1, 1e-5)
    add("ell_34", rg.ell_qd(2.0, 3.0, 4), math.sqrt(2.0), 1e-12)
    add("wc_q2_limit", rg.w_c(0.0, 2.0 + 1e-6, 3), 2.0, 1e-4)
    for q, d in [(4.0, 3), (3.0, 4)]:
        bp = rg.find_B_plus(q, d)
        add("B_plus", rg.g_w(rg.w_c(bp, q, d), q), (d / (d - 2)) ** 2, 1e-10, q=q, B=bp)
        wc = [rg.w_c(b, q, d) for b in np.linspace(0.0, bp, 100)]
        add("wc_decreasing", float(np.max(np.diff(wc))), 0.0, 0.0, q=q, one_sided=True)
    bp = rg.find_B_plus(4.0, 3)
    for B in np.linspace(0.0, bp, 5, endpoint=False):
        pp = rg.transition_probe(4.0, 3, float(B))
        add("first_order", float(pp.first_order and pp.gap > rg.GAP_THRESHOLD), 1.0, 0.5, q=4.0, w=pp.w, B=float(B))
    for q, B in [(4.0, bp + 0.2), (2.0, 0.0)]:
        pp = rg.transition_probe(q, 3, B)
        add("no_transition", float(pp.first_order), 0.0, 0.5, q=q, w=pp.w, B=B)
    return rows


SUITE_FUNCS = {
    "sandwich": suite_sandwich,
    "identities": suite_identities,
    "bethe": suite_bethe,
    "regular": suite_regular,
}


def _trials(cfg: RunConfig, suite: str) -> int:
    return cfg.trials if cfg.trials is not None else DEFAULT_TRIALS[suite]


def cmd_verify(cfg: RunConfig) -> int:
    suite = cfg.suite or "all"
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    names = list(SUITE_FUNCS) if suite == "all" else [suite]
    rows: list[dict] = []
    for name in names:
        got = SUITE_FUNCS[name](cfg)
        bad = sum(not r["passed"] for r in got)
        print(f"verify {name}: {len(got) - bad}/{len(got)} checks passed", file=sys.stderr)
        rows.extend(got)
    _emit_table(cfg, rows, CASE_COLUMNS, "csv")
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAIL


# -- single computations ------------------------------------------------------------

def cmd_exact(cfg: RunConfig) -> int:
    _need(cfg, "q", "w", "B")
    g = load_graph(cfg)
    p = RCParams(cfg.q, cfg.w, cfg.B)
    rec: dict[str, Any] = {"n": g.n, "m": g.m, "q": p.q, "w": p.w, "B": p.B}
    if p.q >= 2 and p.B >= 0:
        rep = sandwich_check(g, p, cfg.tol if cfg.tol is not None else 1e-9)
        rec.update(
            logZ=rep.log_z, logZ2=rep.log_z2, L=rep.L,
            bounds={"lower": rep.log_z2, "upper": rep.log_z2 + rep.log_bound_gap},
            passed=rep.passed,
        )
    else:
        rec.update(logZ=rc_partition(g, p), logZ2=rank2_partition(g, p), L=cyclic_components_max(g), bounds=None)
    _emit_record(cfg, rec)
    return EXIT_OK if rec.get("passed", True) else EXIT_FAIL


def cmd_scan(cfg: RunConfig) -> int:
    from . import regular as rg

    _need(cfg, "q", "d")
    ws = parse_grid(cfg.w_grid or "0:4:81")
    Bs = parse_grid(cfg.B_grid or "0:1:11")
    rg._check_rc(cfg.q, float(ws.min(initial=0.0)), float(Bs.min(initial=0.0)), cfg.d)
    rows = rg.scan(cfg.q, cfg.d, ws, Bs)
    _emit_table(cfg, [asdict(r) for r in rows], ["w", "B", "phi", "t_plus", "t_minus", "dphi_dw"], "csv")
    if cfg.figure:
        from .plotting import plot_scan

        plot_scan(rows, cfg.figure, title=f"q={cfg.q:g}, d={cfg.d}")
    return EXIT_OK


def cmd_curve(cfg: RunConfig) -> int:
    from . import regular as rg

    _need(cfg, "q", "d")
    if cfg.B_grid:
        Bs = parse_grid(cfg.B_grid)
    else:
        Bs = rg.find_B_plus(cfg.q, cfg.d) * np.arange(20) / 20.0
    rows, b_plus, resid = rg.trace_curve(cfg.q, cfg.d, Bs)
    cols = ["B", "w_c", "beta_star", "g", "first_order", "gap", "t_gap"]
    _emit_table(cfg, [asdict(r) for r in rows], cols, "csv", {"B_plus": b_plus, "residual": resid})
    if cfg.figure:
        from .plotting import plot_curve

        plot_curve(rows, b_plus, cfg.figure, title=f"q={cfg.q:g}, d={cfg.d}")
    return EXIT_OK


def _eising_from(cfg: RunConfig) -> EIsingParams:
    direct = [cfg.beta, cfg.k, cfg.h]
    if any(v is not None for v in direct):
        if any(v is None for v in direct):
            raise ValueError("--beta, --k and --h must be given together")
        return EIsingParams(cfg.beta, cfg.k, cfg.h)
    _need(cfg, "q", "w", "B")
    return rc_to_eising(cfg.q, cfg.w, cfg.B).eising


def cmd_tree(cfg: RunConfig) -> int:
    depth = cfg.depth
    if cfg.gen:
        spec, gen_depth = parse_gw(cfg.gen)
        depth = depth if depth is not None else gen_depth
    else:
        _need(cfg, "d")
        spec = regular_tree_spec(cfg.d)
    depth = depth if depth is not None else 30
    p = _eising_from(cfg)
    est = tree_pressure_mc(spec, p, depth, cfg.samples, cfg.seed)
    rec = {
        "phi_free": est.free, "phi_plus": est.plus, "estimate": est.estimate, "width": est.width,
        "stderr": est.stderr, "free_stderr": est.free_stderr, "plus_stderr": est.plus_stderr,
        "samples": est.samples, "depth": est.depth,
        "mapped": {"beta_star": p.beta_star, "k": p.k, "h": p.h},
    }
    _emit_record(cfg, rec)
    return EXIT_OK


def cmd_bp(cfg: RunConfig) -> int:
    g = load_graph(cfg)
    if cfg.beta is not None or cfg.k is not None or cfg.h is not None:
        weights: Any = _eising_from(cfg)
    else:
        _need(cfg, "q", "w", "B")
        weights = rc_to_two_spin(cfg.q, cfg.w, cfg.B)
    res = bethe_max(g, weights, restarts=cfg.restarts, seed=cfg.seed, tol=cfg.tol if cfg.tol is not None else 1e-12)
    rec = {
        "n": g.n, "m": g.m, "logZB": res.log_zb, "logZB_per_vertex": res.log_zb / max(g.n, 1),
        "fixed_points": list(res.fixed_points), "converged": res.converged, "failed": res.failed,
    }
    _emit_record(cfg, rec)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "exact": cmd_exact,
    "scan": cmd_scan,
    "curve": cmd_curve,
    "tree": cmd_tree,
    "bp": cmd_bp,
}


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for name in ("q", "w", "B", "beta", "k", "h", "tol"):
        common.add_argument(f"--{name}", type=float)
    for name in ("d", "seed", "trials", "depth", "samples", "restarts"):
        common.add_argument(f"--{name}", type=int)
    common.add_argument("--graph", metavar="FILE")
    common.add_argument("--gen", metavar="SPEC", help='"regular:n,d", "gnm:n,m", "tree:n" or "gw:LAW[@ROOT],depth"')
    common.add_argument("--w-grid", dest="w_grid", metavar="LO:HI:N")
    common.add_argument("--B-grid", dest="B_grid", metavar="LO:HI:N")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--figure", metavar="PATH", help="also render a figure (scan, curve)")
    common.add_argument("--config", metavar="FILE", help="key = value file; flags override it")

    parser = argparse.ArgumentParser(prog="rclab", description="Random cluster model toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run a property suite")
    v.add_argument("suite", nargs="?", choices=SUITES)
    for name in ("exact", "scan", "curve", "tree", "bp"):
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if ns.config:
        values.update({k: _convert(k, v) for k, v in parse_config_text(Path(ns.config).read_text()).items()})
    for f in fields(RunConfig):
        cli = getattr(ns, f.name, None)
        if cli is not None:
            values[f.name] = cli
    values["command"] = ns.command
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        return COMMANDS[cfg.command](cfg)
    except (NonConvergence, NoConvergedRun, InconsistentMarginals) as exc:
        print(f"rclab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (RCLabError, GraphError, ValueError, OSError) as exc:
        print(f"rclab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
