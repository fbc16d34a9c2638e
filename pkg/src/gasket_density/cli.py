"""Command line entry point: ``gasket-density <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import log
from typing import Optional

import numpy as np

from . import cone, derham, edge, energy, exact
from .address import AddressError, EdgeAddress, SymbolStream, Word
from .harmonic import apply_word, build_context
from .report import all_passed, format_report
from .verify import run_suite


@dataclass
class RunConfig:
    command: str
    N: int = 2
    mode: str = "exact"
    edge: Optional[str] = None
    u: Optional[tuple] = None
    depth: int = 8
    tol: float = 1e-10
    seed: int = 0
    out: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("--dim must be at least 2")


def parse_vector(text: str) -> tuple:
    """Comma separated rationals (``p/q``) or decimals, kept exact."""
    try:
        return tuple(Fraction(p.strip()) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse boundary vector {text!r}") from exc


def _emit(lines, out: Optional[str]):
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_u(cfg: RunConfig):
    if cfg.u is None:
        raise ValueError("--u is required")
    if len(cfg.u) != cfg.N + 1:
        raise ValueError(f"--u needs {cfg.N + 1} entries for --dim {cfg.N}")
    return cfg.u


def _edge(cfg: RunConfig) -> EdgeAddress:
    return EdgeAddress.parse(cfg.edge or ":1:2", cfg.N)


def cmd_verify(cfg: RunConfig) -> int:
    checks = run_suite(cfg.N, corrupt=cfg.extra.get("corrupt", False), seed=cfg.seed)
    _emit([format_report(checks).rstrip("\n")], cfg.out)
    return 0 if all_passed(checks) else 1


def cmd_profile(cfg: RunConfig) -> int:
    ctx = build_context(cfg.N)
    u = _need_u(cfg)
    cells = cfg.extra.get("cells")
    if cells is not None:
        lines = ["word,ratio"]
        for syms in product(ctx.symbols, repeat=cells):
            r = energy.cell_ratio(ctx, u, syms, cfg.mode)
            lines.append(f"{Word(syms, ctx.N) or '-'},{exact.fmt(r) if cfg.mode == 'exact' else f'{r:.17g}'}")
        _emit(lines, cfg.out)
        return 0
    if cfg.depth > 20:
        raise ValueError("--depth is limited to 20")
    mode = cfg.mode if cfg.depth <= 12 else "float"
    samples = edge.edge_profile(ctx, u, _edge(cfg), cfg.depth, mode)
    _emit(edge.profile_rows(samples), cfg.out)
    return 0


def _fit(ns, values):
    pts = [(n, log(float(v)) if isinstance(v, float) else energy._log_fraction(Fraction(v)))
           for n, v in zip(ns, values) if v > 0]
    if len(pts) < 2:
        return None
    x, y = zip(*pts)
    return float(np.polyfit(x, y, 1)[0])


def cmd_decay(cfg: RunConfig) -> int:
    ctx = build_context(cfg.N)
    u = _need_u(cfg)
    w = Word.parse(cfg.extra.get("word") or "", cfg.N)
    i, j = cfg.extra.get("i", 1), cfg.extra.get("j", 2)
    n_max = cfg.extra.get("n_max", 30)
    if n_max > 60:
        raise ValueError("--n-max is limited to 60")
    kind = cfg.extra.get("kind", "tail")
    if kind == "tail":
        x = apply_word(ctx, w, u)
        if x[i - 1] != x[j - 1]:
            raise ValueError("u is not symmetric in i and j on the cell; use --kind gap or the vanish command")
        rep = energy.symmetric_tail_ratio(ctx, u, w, i, j, n_max, (min(10, n_max // 3), n_max))
        lines = rep.rows()
        ns, vals = list(range(len(rep.ratios))), rep.ratios
        predicted = rep.predicted_slope
    else:
        n_max = min(n_max, 12)
        lines = ["n,ratio,log_ratio"]
        ns, vals = [], []
        for n in range(n_max + 1):
            worst = max(abs(edge.delta_gap(ctx, u, w + w2, i, j)) for w2 in product((i, j), repeat=n))
            ns.append(n)
            vals.append(worst)
            lr = energy._log_fraction(worst) if worst > 0 else float("-inf")
            lines.append(f"{n},{float(worst):.17g},{lr:.17g}")
        predicted = log(cfg.N / (cfg.N + 1))
    _emit(lines, cfg.out)
    slope = _fit(ns[len(ns) // 3:], vals[len(vals) // 3:])
    if slope is None:
        print("fit skipped: ratios vanish", file=sys.stderr)
    else:
        print(f"slope={slope:.6f} predicted={predicted:.6f}", file=sys.stderr)
    return 0


def cmd_maxloc(cfg: RunConfig) -> int:
    N = cfg.N
    target = cfg.extra.get("target")
    if target is not None:
        if not 0.5 < target < 1.0:
            raise ValueError("--target must lie strictly inside (1/2, 1)")
        _emit(["target,s", f"{target:.17g},{derham.M_inverse(N, target):.17g}"], cfg.out)
        return 0
    grid = set(np.geomspace(cfg.extra.get("s_min", 1e-3), cfg.extra.get("s_max", 1e3),
                            cfg.extra.get("points", 61)).tolist())
    grid.add(1.0 / (N + 1))
    lines = ["s,M(s)"] + [f"{s:.17g},{m:.17g}" for s, m in derham.maxloc_rows(N, sorted(grid))]
    _emit(lines, cfg.out)
    return 0


def cmd_derham(cfg: RunConfig) -> int:
    pts = cfg.extra.get("points", 1025)
    t = np.linspace(0.0, 1.0, pts)
    vals = derham.L_eval(cfg.N, t)
    _emit(["t,L(t)"] + [f"{a:.17g},{b:.17g}" for a, b in zip(t, vals)], cfg.out)
    return 0


def cmd_cone_density(cfg: RunConfig) -> int:
    ctx = build_context(cfg.N)
    if cfg.N not in cone.CONE_GENERATORS:
        raise ValueError("cone-density supports --dim 2 and 3 only")
    u = _need_u(cfg)
    e = _edge(cfg)
    head = Word.parse(cfg.extra.get("omega") or "", cfg.N)
    tail = cfg.extra.get("tail") or e.j
    om = SymbolStream.eventually(head, tail, cfg.N)
    res = cone.density_along(ctx, None, e, u, om, cfg.tol)
    lines = ["value,iterations,last_step,certified",
             f"{res.value:.17g},{res.dual.iterations},{res.dual.last_step:.3e},{res.dual.certified}"]
    lines += ["l,lambda"] + [f"{l},{x:.17g}" for l, x in enumerate(res.lambdas, start=1)]
    _emit(lines, cfg.out)
    return 0


def cmd_vanish(cfg: RunConfig) -> int:
    ctx = build_context(cfg.N)
    u = _need_u(cfg)
    w = Word.parse(cfg.extra.get("word") or "", cfg.N)
    eps = Fraction(cfg.extra.get("eps", "1/1000"))
    wit = energy.find_vanishing_cell(ctx, u, w, eps)
    lines = ["word,ratio,case", f"{wit.word or '-'},{float(wit.ratio):.17g},{wit.case}"]
    _emit(lines, cfg.out)
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "profile": cmd_profile,
    "decay": cmd_decay,
    "maxloc": cmd_maxloc,
    "derham": cmd_derham,
    "cone-density": cmd_cone_density,
    "vanish": cmd_vanish,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=2, help="gasket dimension N (default 2)")
    common.add_argument("--mode", choices=("exact", "float"), default="exact")
    common.add_argument("--edge", help="edge as w:i:j, e.g. ':1:2' or '13:1:3'")
    common.add_argument("--u", type=parse_vector, help="boundary values, e.g. '1,0,0' or '1/2,0,-1'")
    common.add_argument("--depth", type=int, default=8)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write CSV here instead of stdout")

    p = argparse.ArgumentParser(prog="gasket-density", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the exact identity suite")
    v.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    pr = sub.add_parser("profile", parents=[common], help="density profile along an edge")
    pr.add_argument("--cells", type=int, help="instead write per-cell ratios over all words of this length")
    d = sub.add_parser("decay", parents=[common], help="ratio decay along tails")
    d.add_argument("--word", default="")
    d.add_argument("--i", type=int, default=1)
    d.add_argument("--j", type=int, default=2)
    d.add_argument("--n-max", type=int, default=30)
    d.add_argument("--kind", choices=("tail", "gap"), default="tail")
    m = sub.add_parser("maxloc", parents=[common], help="maximum location map M(s)")
    m.add_argument("--s-min", type=float, default=1e-3)
    m.add_argument("--s-max", type=float, default=1e3)
    m.add_argument("--points", type=int, default=61)
    m.add_argument("--target", type=float, help="invert M at this value instead")
    dr = sub.add_parser("derham", parents=[common], help="tabulate L on a uniform grid")
    dr.add_argument("--points", type=int, default=1025)
    c = sub.add_parser("cone-density", parents=[common], help="density at a coded edge point")
    c.add_argument("--omega", default="", help="finite head of the symbol stream")
    c.add_argument("--tail", type=int, help="symbol repeated forever after the head (default: j)")
    va = sub.add_parser("vanish", parents=[common], help="find a cell with a small ratio")
    va.add_argument("--word", default="")
    va.add_argument("--eps", default="1/1000")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = {"command", "dim", "mode", "edge", "u", "depth", "tol", "seed", "out"}
    extra = {k: v for k, v in vars(ns).items() if k not in base}
    return RunConfig(ns.command, ns.dim, ns.mode, ns.edge, ns.u, ns.depth, ns.tol, ns.seed, ns.out, extra)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (ValueError, AddressError, energy.SearchExhausted, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
