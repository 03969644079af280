"""``potts-flow`` command-line front end."""
import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import binary, potts
from .data import (DISK_INSIDE, DISK_OUTSIDE, QUADRANT_MEANS, build_potts_costs,
                   build_two_label_costs, disk_image, quadrant_image)
from .io import PGMError, load_cost_csv, load_pgm, save_labels
from .params import ALGORITHMS, BlockPreconditioner, SolverParams

DISPLAY_NAMES = {
    "padmm-ty": "pADMM-TY",
    "alg1": "ALG1",
    "rpadmm-i": "rpADMMI",
    "rpadmm-ii": "rpADMMII",
    "rpdrq": "rPDRQ",
}
BENCH_ORDER = ("padmm-ty", "alg1", "rpadmm-i", "rpadmm-ii", "rpdrq")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


@dataclass
class RunConfig:
    model: str
    algorithm: str
    alpha: float = 0.5
    eps: float = 1e-4
    max_iters: int = 10000
    params: SolverParams = field(default_factory=SolverParams)
    pc: BlockPreconditioner = field(default_factory=BlockPreconditioner)
    labels: int = 2
    means: Optional[List[float]] = None
    mu_fg: float = 1.0
    mu_bg: float = 0.0
    beta: float = 0.5
    input: Optional[str] = None
    costs: Optional[List[str]] = None
    out: Optional[str] = None
    trace: Optional[str] = None
    ref_energy: Optional[float] = None
    ref_run: int = binary.REFERENCE_ITERS
    ref_self: bool = False


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _paths(text):
    paths = [v.strip() for v in text.split(",") if v.strip()]
    if not paths:
        raise argparse.ArgumentTypeError("expected comma-separated paths")
    return paths


def _add_solver_args(p, eps=True):
    p.add_argument("--alpha", type=float, default=0.5, help="TV weight (default 0.5)")
    if eps:
        p.add_argument("--eps", type=float, default=1e-4, help="relative energy tolerance")
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--c", type=float, default=0.3, help="ADMM step size")
    p.add_argument("--a", type=float, default=8.0, help="flow-block preconditioner weight")
    p.add_argument("--a-tilde", type=float, default=2.0, help="two-label p-block weight")
    p.add_argument("--a1", type=float, default=2.0, help="multi-label p_i weight")
    p.add_argument("--a2", type=float, default=None, help="multi-label p_s weight (default 2n)")
    p.add_argument("--rho", type=float, default=1.9, help="Eckstein-Bertsekas / DR relaxation")
    p.add_argument("--r", type=float, default=1.618, help="Fortin-Glowinski relaxation")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    ref = p.add_mutually_exclusive_group()
    ref.add_argument("--ref-energy", type=float, default=None, help="known optimal energy E*")
    ref.add_argument("--ref-run", type=int, default=binary.REFERENCE_ITERS,
                     help="rPDRQ iterations used to compute E* (default 30000)")
    ref.add_argument("--ref-self", action="store_true",
                     help="stop on |E_k - E_{k-1}| / |E_k| instead of a reference")


def build_parser():
    parser = argparse.ArgumentParser(prog="potts-flow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    s2 = sub.add_parser("segment2", help="two-label min-cut segmentation")
    s2.add_argument("--input", help="grayscale PGM (P2/P5)")
    s2.add_argument("--costs", type=_paths, help="C_s.csv,C_t.csv instead of an image")
    s2.add_argument("--mu-fg", type=float, default=1.0)
    s2.add_argument("--mu-bg", type=float, default=0.0)
    s2.add_argument("--beta", type=float, default=0.5, help="threshold for the label image")
    s2.add_argument("--algo", choices=ALGORITHMS, default="rpadmm-ii")
    s2.add_argument("--out", help="label PGM")
    s2.add_argument("--trace", help="trace CSV")
    _add_solver_args(s2)

    sn = sub.add_parser("segmentn", help="n-label Potts segmentation")
    sn.add_argument("--input", help="grayscale PGM (P2/P5)")
    sn.add_argument("--costs", type=_paths, help="one cost CSV per label")
    sn.add_argument("--labels", type=int, default=None)
    sn.add_argument("--means", type=_floats, help="comma-separated label means")
    sn.add_argument("--algo", choices=ALGORITHMS, default="rpadmm-ii")
    sn.add_argument("--out", help="label PGM")
    sn.add_argument("--trace", help="trace CSV")
    _add_solver_args(sn)

    b = sub.add_parser("bench", help="iterations and time to each tolerance, all algorithms")
    b.add_argument("--model", choices=("two-label", "potts"), default="two-label")
    b.add_argument("--input", help="grayscale PGM; default is a synthetic image")
    b.add_argument("--size", type=int, default=64, help="synthetic image side")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--all", action="store_true", help="run all five algorithms (default)")
    b.add_argument("--algos", type=_paths, help="subset of algorithms")
    b.add_argument("--eps", dest="eps_list", type=_floats, default=[1e-4, 1e-6],
                   help="comma-separated tolerances (default 1e-4,1e-6)")
    b.add_argument("--labels", type=int, default=4)
    b.add_argument("--means", type=_floats, default=None)
    b.add_argument("--mu-fg", type=float, default=None,
                   help="foreground mean (default 1, or the synthetic disk's inside value)")
    b.add_argument("--mu-bg", type=float, default=None,
                   help="background mean (default 0, or the synthetic disk's outside value)")
    b.add_argument("--table", help="markdown table output")
    b.add_argument("--table-csv", help="CSV table output")
    _add_solver_args(b, eps=False)

    sub.add_parser("verify", help="run the feasibility and oracle checks")
    return parser


def _params(ns, eps):
    return SolverParams(c=ns.c, a=ns.a, a_tilde=ns.a_tilde, rho=ns.rho, r=ns.r,
                        sigma=ns.sigma, tau=ns.tau, eps=eps, max_iters=ns.max_iters)


def config_from_args(ns) -> RunConfig:
    model = "two-label" if ns.command == "segment2" else "potts"
    labels = getattr(ns, "labels", None)
    means = getattr(ns, "means", None)
    if model == "potts":
        if labels is None:
            labels = len(means) if means else (len(ns.costs) if ns.costs else 0)
        if means is not None and len(means) != labels:
            raise ValueError(f"--labels {labels} but {len(means)} means given")
        if ns.costs is not None and len(ns.costs) != labels:
            raise ValueError(f"--labels {labels} but {len(ns.costs)} cost files given")
    if ns.input is None and ns.costs is None:
        raise ValueError("one of --input or --costs is required")
    return RunConfig(
        model=model, algorithm=ns.algo, alpha=ns.alpha, eps=ns.eps, max_iters=ns.max_iters,
        params=_params(ns, ns.eps), pc=BlockPreconditioner(ns.a, ns.a1, ns.a2),
        labels=labels if model == "potts" else 2, means=means,
        mu_fg=getattr(ns, "mu_fg", 1.0), mu_bg=getattr(ns, "mu_bg", 0.0),
        beta=getattr(ns, "beta", 0.5), input=ns.input, costs=ns.costs, out=ns.out,
        trace=ns.trace, ref_energy=ns.ref_energy, ref_run=ns.ref_run, ref_self=ns.ref_self)


def load_problem(cfg: RunConfig):
    if cfg.model == "two-label":
        if cfg.costs is not None:
            if len(cfg.costs) != 2:
                raise ValueError("two-label --costs needs exactly two files: C_s,C_t")
            cs, ct = (load_cost_csv(p) for p in cfg.costs)
        else:
            cs, ct = build_two_label_costs(load_pgm(cfg.input), cfg.mu_fg, cfg.mu_bg)
        return binary.TwoLabelProblem(cs, ct, cfg.alpha)
    if cfg.labels < 2:
        raise ValueError("the Potts model needs at least two labels")
    if cfg.costs is not None:
        costs = np.stack([load_cost_csv(p) for p in cfg.costs])
    else:
        means = cfg.means if cfg.means is not None else list(np.linspace(0, 1, cfg.labels))
        costs = build_potts_costs(load_pgm(cfg.input), means)
    return potts.PottsProblem(costs, cfg.alpha)


def resolve_reference(prob, params, ref_energy, ref_run, ref_self):
    """``(E*, self_stop)`` according to the reference-energy policy flags."""
    if ref_self:
        return None, True
    if ref_energy is not None:
        return ref_energy, False
    if isinstance(prob, potts.PottsProblem):
        return potts.compute_reference_energy(prob, params, ref_run), False
    return binary.compute_reference_energy(prob, params, ref_run), False


def solve(algorithm, prob, params, pc, e_ref, self_stop):
    if isinstance(prob, potts.PottsProblem):
        return potts.run_potts(algorithm, prob, params, e_ref, self_stop, pc)
    return binary.run(algorithm, prob, params, e_ref, self_stop)


def run_command(cfg: RunConfig, out=None) -> int:
    """Segment one input; 0 on convergence, 2 if ``max_iters`` ran out."""
    out = out or sys.stdout
    prob = load_problem(cfg)
    n = prob.n if cfg.model == "potts" else None
    if cfg.algorithm in ("rpdrq", "alg1"):
        cfg.params.step_sizes(cfg.algorithm, n)
    if n is not None:
        cfg.pc.resolve(n)
    e_ref, self_stop = resolve_reference(prob, cfg.params, cfg.ref_energy, cfg.ref_run, cfg.ref_self)
    state, trace = solve(cfg.algorithm, prob, cfg.params, cfg.pc, e_ref, self_stop)
    if cfg.out:
        if cfg.model == "two-label":
            save_labels(cfg.out, binary.threshold(state.u, cfg.beta), 2)
        else:
            save_labels(cfg.out, potts.argmax_label(state.u), prob.n)
    if cfg.trace:
        trace.write_csv(cfg.trace)
    if e_ref is not None:
        print(f"reference_energy: {e_ref!r}", file=out)
    print("algorithm, iters, seconds, final_energy, rel_err", file=out)
    print(f"{cfg.algorithm}, {trace.iterations}, {trace.seconds:.3f}, "
          f"{trace.final_energy!r}, {trace.final_rel_err!r}", file=out)
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def bench_rows(prob, params, pc, algorithms, eps_list, e_ref, self_stop):
    """One run per algorithm to ``min(eps_list)``; the first crossing of each tolerance."""
    run_params = params.with_(eps=min(eps_list))
    rows = []
    for algo in algorithms:
        _, trace = solve(algo, prob, run_params, pc, e_ref, self_stop)
        cells = []
        for eps in eps_list:
            rec = trace.first_below(eps)
            cells.append((rec.iter, rec.elapsed_ms / 1000.0) if rec else (None, None))
        rows.append((algo, cells))
    return rows


def format_markdown(rows, eps_list):
    head = ["algorithm"]
    for eps in eps_list:
        head += [f"iters@{eps:g}", f"seconds@{eps:g}"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for algo, cells in rows:
        vals = [DISPLAY_NAMES[algo]]
        for it, sec in cells:
            vals += ["n/a", "n/a"] if it is None else [str(it), f"{sec:.2f}"]
        lines.append("| " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def format_csv(rows, eps_list):
    head = ["algorithm"]
    for eps in eps_list:
        head += [f"iters@{eps:g}", f"seconds@{eps:g}"]
    lines = [",".join(head)]
    for algo, cells in rows:
        vals = [DISPLAY_NAMES[algo]]
        for it, sec in cells:
            vals += ["", ""] if it is None else [str(it), f"{sec:.4f}"]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def bench_command(ns, out=None) -> int:
    out = out or sys.stdout
    algorithms = list(BENCH_ORDER) if ns.all or not ns.algos else ns.algos
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {a!r}")
    if not ns.eps_list or min(ns.eps_list) <= 0:
        raise ValueError("--eps needs positive tolerances")
    eps_list = sorted(ns.eps_list, reverse=True)
    params = _params(ns, min(eps_list))
    pc = BlockPreconditioner(ns.a, ns.a1, ns.a2)
    if ns.model == "two-label":
        if ns.input:
            f, fg, bg = load_pgm(ns.input), 1.0, 0.0
        else:
            f, fg, bg = disk_image(ns.size, 0.1, ns.seed), DISK_INSIDE, DISK_OUTSIDE
        fg = fg if ns.mu_fg is None else ns.mu_fg
        bg = bg if ns.mu_bg is None else ns.mu_bg
        prob = binary.TwoLabelProblem(*build_two_label_costs(f, fg, bg), ns.alpha)
    else:
        means = ns.means or list(QUADRANT_MEANS)
        if ns.input:
            f = load_pgm(ns.input)
        else:
            f = quadrant_image(ns.size, means, 0.1, ns.seed)
        prob = potts.PottsProblem(build_potts_costs(f, means), ns.alpha)
    e_ref, self_stop = resolve_reference(prob, params, ns.ref_energy, ns.ref_run, ns.ref_self)
    rows = bench_rows(prob, params, pc, algorithms, eps_list, e_ref, self_stop)
    table = format_markdown(rows, eps_list)
    out.write(table)
    if ns.table:
        with open(ns.table, "w") as fh:
            fh.write(table)
    if ns.table_csv:
        with open(ns.table_csv, "w") as fh:
            fh.write(format_csv(rows, eps_list))
    return EXIT_OK


def verify_command(out=None) -> int:
    out = out or sys.stdout
    from .verify import run_all
    ok = True
    for name, passed, detail in run_all():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}", file=out)
        ok &= bool(passed)
    return EXIT_OK if ok else EXIT_ERROR


def _apply_thread_cap():
    raw = os.environ.get("POTTS_FLOW_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValueError(f"POTTS_FLOW_THREADS must be a positive integer, got {raw!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        if ns.command == "verify":
            return verify_command()
        if ns.command == "bench":
            return bench_command(ns)
        return run_command(config_from_args(ns))
    except (OSError, PGMError, ValueError) as exc:
        print(f"potts-flow: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
