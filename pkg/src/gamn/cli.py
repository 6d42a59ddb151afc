"""Command-line experiment orchestration.

Verbs: `run` (convergence traces), `sweep-power`, `sweep-n`, `grad-check`.
All outputs are deterministic functions of the config file and master seed;
`--jobs` only changes how realizations are fanned out, never the numbers.

Exit codes: 0 success, 1 config error, 2 runtime failure, 3 gradient
tolerance failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, algorithm, cdiff, config, nets
from .metrics import loss_graph, wsr_graph

_F = "{:.17g}".format  # CSV number formatting, full double precision


def _resolve_out_dir(args, cfg: config.ExperimentConfig) -> Path:
    if args.out is not None:
        out = args.out
    elif cfg.out_dir is not None:
        out = cfg.out_dir
    else:
        out = os.environ.get("GAMN_OUT_DIR", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_overrides(cfg: config.ExperimentConfig, args) -> None:
    if args.variants is not None:
        variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
        for v in variants:
            if v not in algorithm.VARIANTS:
                raise config.ConfigError(f"run.variants: unknown variant {v!r}")
        cfg.variants = variants
    if args.seed is not None:
        cfg.master_seed = args.seed


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_meta(out_dir: Path, cfg: config.ExperimentConfig) -> None:
    resolved = cfg
    resolved.out_dir = str(out_dir)
    (out_dir / f"{cfg.prefix}_meta.txt").write_text(
        config.render(resolved, __version__), encoding="ascii")


def cmd_run(cfg: config.ExperimentConfig, out_dir: Path, jobs: int) -> int:
    rows = []
    for variant in cfg.variants:
        avg = algorithm.average_runs(cfg.scenario(), variant, cfg.n_realizations,
                                     cfg.master_seed, jobs=jobs)
        for epoch in range(avg.mean.shape[0]):
            rows.append((variant, str(epoch), _F(avg.mean[epoch]), _F(avg.stderr[epoch])))
    _write_csv(out_dir / f"{cfg.prefix}_trace.csv",
               "variant,epoch,mean_wsr,stderr_wsr", rows)
    _write_meta(out_dir, cfg)
    return 0


def cmd_sweep_power(cfg: config.ExperimentConfig, out_dir: Path, jobs: int) -> int:
    rows = []
    for variant in cfg.variants:
        for p_dbm in cfg.powers_dbm:
            avg = algorithm.average_runs(cfg.scenario(power_dbm=p_dbm), variant,
                                         cfg.n_realizations, cfg.master_seed, jobs=jobs)
            rows.append((variant, _F(p_dbm), _F(avg.final_mean),
                         _F(float(np.mean(avg.bests))), _F(avg.final_stderr)))
    _write_csv(out_dir / f"{cfg.prefix}_power.csv",
               "variant,power_dBm,final_wsr,best_wsr,stderr", rows)
    _write_meta(out_dir, cfg)
    return 0


def cmd_sweep_n(cfg: config.ExperimentConfig, out_dir: Path, jobs: int) -> int:
    rows = []
    for variant in cfg.variants:
        for n in cfg.n_list:
            avg = algorithm.average_runs(cfg.scenario(n_ris=n), variant,
                                         cfg.n_realizations, cfg.master_seed, jobs=jobs)
            rows.append((variant, str(n), _F(avg.final_mean),
                         _F(float(np.mean(avg.bests))), _F(avg.final_stderr)))
    _write_csv(out_dir / f"{cfg.prefix}_n.csv",
               "variant,N,final_wsr,best_wsr,stderr", rows)
    _write_meta(out_dir, cfg)
    return 0


def grad_check_report(cfg: config.ExperimentConfig, eps: float = 1e-6) -> dict[str, float]:
    """Max relative finite-difference error for the four gradients the
    algorithm consumes, on a seeded instance of the configured size."""
    scenario = cfg.scenario()
    system = scenario.system
    channels = scenario.draw_channels(cfg.master_seed)
    n, m, k = scenario.n_ris, scenario.n_tx, scenario.n_users
    rng = np.random.default_rng(cfg.master_seed + 1)
    theta, w = algorithm._init_point(rng, n, m, k, system.power)
    pl = nets.ComplexMLP.init(int(rng.integers(2 ** 63)), n)
    prl = nets.RealMLP.init(int(rng.integers(2 ** 63)), m, k)

    report: dict[str, float] = {}
    report["d_wsr/d_theta"] = cdiff.grad_check(
        lambda leaf: wsr_graph(leaf, cdiff.constant(w), channels,
                               system.weights, system.sigma2), theta, eps=eps)
    report["d_wsr/d_w"] = cdiff.grad_check(
        lambda leaf: wsr_graph(cdiff.constant(theta), leaf, channels,
                               system.weights, system.sigma2), w, eps=eps)

    # One meta epoch with the detached network inputs frozen at their base
    # values, so finite differences probe exactly the differentiated paths.
    g_theta = algorithm.grad_theta(theta, w, channels, system)
    theta_star = algorithm.phase_branch(
        pl, [cdiff.constant(p) for p in pl.params()], theta, 1,
        lambda _: g_theta, real_pl=False).value
    g_w = algorithm.grad_w(theta_star, w, channels, system)

    def meta_loss(pl_nodes, prl_nodes) -> cdiff.Node:
        th = algorithm.phase_branch(pl, pl_nodes, theta, 1, lambda _: g_theta,
                                    real_pl=False)
        wn = algorithm.precoder_branch(prl, prl_nodes, w, 1, lambda _: g_w,
                                       cfg.hyper.euler_factor, system.power)
        return loss_graph(th, wn, channels, system.weights, system.sigma2)

    worst = 0.0
    for idx in range(4):
        def build(leaf, idx=idx):
            pl_nodes = [cdiff.constant(p) for p in pl.params()]
            pl_nodes[idx] = leaf
            return meta_loss(pl_nodes, [cdiff.constant(p) for p in prl.params()])
        worst = max(worst, cdiff.grad_check(build, pl.params()[idx], eps=eps))
    report["d_loss/d_pl_weights"] = worst

    worst = 0.0
    for idx in range(4):
        def build(leaf, idx=idx):
            prl_nodes = [cdiff.constant(p) for p in prl.params()]
            prl_nodes[idx] = leaf
            return meta_loss([cdiff.constant(p) for p in pl.params()], prl_nodes)
        worst = max(worst, cdiff.grad_check(build, prl.params()[idx].astype(complex),
                                            eps=eps))
    report["d_loss/d_prl_weights"] = worst
    return report


def cmd_grad_check(cfg: config.ExperimentConfig, tolerance: float) -> int:
    report = grad_check_report(cfg)
    ok = True
    for name, err in report.items():
        status = "ok" if err < tolerance else "FAIL"
        print(f"{name:24s} max relative error {err:.3e}  [{status}]")
        ok = ok and err < tolerance
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamn", description="RIS phase/precoder meta-learning experiments")
    parser.add_argument("--version", action="version", version=f"gamn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "average convergence traces, one CSV row per epoch"),
                            ("sweep-power", "final/best rate vs transmit power"),
                            ("sweep-n", "final/best rate vs number of RIS elements"),
                            ("grad-check", "verify autodiff against finite differences")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to INI config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel realizations (never affects results)")
        p.add_argument("--variants", default=None, help="comma list overriding run.variants")
        p.add_argument("--seed", type=int, default=None, help="override run.master_seed")
        if name == "grad-check":
            p.add_argument("--tolerance", type=float, default=1e-5)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config.load(args.config)
        _apply_overrides(cfg, args)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "grad-check":
            return cmd_grad_check(cfg, args.tolerance)
        out_dir = _resolve_out_dir(args, cfg)
        jobs = max(1, args.jobs)
        if args.command == "run":
            return cmd_run(cfg, out_dir, jobs)
        if args.command == "sweep-power":
            return cmd_sweep_power(cfg, out_dir, jobs)
        if args.command == "sweep-n":
            return cmd_sweep_n(cfg, out_dir, jobs)
        raise AssertionError(f"unhandled command {args.command}")
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
