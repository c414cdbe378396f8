"""Command-line entry point: ``fgc analyze | simulate | preprocess``.

Exit status is 0 on success, 2 for invalid input or configuration and 1 for
unexpected internal errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .fda import InputError, KernelSpec, SemiMetricSpec
from .gcgmc import ForecastConfig, WindowPlan, run_expanding_window
from .ingest import atomic_write_text, cpi_normalize, log_returns, read_curves, write_curves
from .nw import DEFAULT_QUANTILES, BandwidthSearch
from .report import format_report, steps_csv
from .simulate import McPlan, SimConfig, run_monte_carlo

logger = logging.getLogger("fgc")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


@dataclass
class RunConfig:
    train_fraction: float = 0.8
    n_train: int | None = None
    derivative_order: int = 2
    quantile_grid: tuple[float, ...] = DEFAULT_QUANTILES
    min_active_neighbors: int = 1
    refresh_bandwidths: bool = True
    seed: int = 0
    out: Path | None = None

    def validate(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise InputError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.n_train is not None and self.n_train < 2:
            raise InputError(f"n_train must be at least 2, got {self.n_train}")
        self.forecast_config()

    def forecast_config(self) -> ForecastConfig:
        return ForecastConfig(
            semimetric=SemiMetricSpec(self.derivative_order),
            kernel=KernelSpec(),
            search=BandwidthSearch(tuple(self.quantile_grid), self.min_active_neighbors),
            refresh_bandwidths=self.refresh_bandwidths,
        )

    def plan(self, n_total: int) -> WindowPlan:
        if self.n_train is not None:
            return WindowPlan(n_total, self.n_train)
        return WindowPlan.from_fraction(n_total, self.train_fraction)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def cmd_analyze(args) -> int:
    cfg = RunConfig(
        train_fraction=args.train_frac,
        n_train=args.n_train,
        derivative_order=args.deriv_order,
        quantile_grid=args.quantiles,
        min_active_neighbors=args.min_neighbors,
        refresh_bandwidths=not args.freeze_bandwidths,
        seed=args.seed,
        out=args.out,
    )
    cfg.validate()
    x = read_curves(args.x)
    y = read_curves(args.y)
    if len(x) != len(y):
        raise InputError(f"series lengths differ: X ({args.x}) has {len(x)} curves, "
                         f"Y ({args.y}) has {len(y)}")
    plan = cfg.plan(len(x))
    report = run_expanding_window(x, y, plan, cfg.forecast_config())
    echo = {
        "x_path": args.x.name,
        "y_path": args.y.name,
        "n_total": plan.n_total,
        "n_train_initial": plan.n_train_initial,
        "train_fraction": cfg.train_fraction,
        "derivative_order": cfg.derivative_order,
        "kernel": KernelSpec().kind.value,
        "quantile_grid": list(cfg.quantile_grid),
        "min_active_neighbors": cfg.min_active_neighbors,
        "refresh_bandwidths": cfg.refresh_bandwidths,
        "seed": cfg.seed,
    }
    text = format_report(report, echo)
    if args.out is not None:
        atomic_write_text(args.out, text)
        atomic_write_text(args.out.with_suffix(".steps.csv"), steps_csv(report))
    else:
        sys.stdout.write(text)
    gx = "undefined" if report.gcgmc_x is None else f"{report.gcgmc_x:.4f}"
    gy = "undefined" if report.gcgmc_y is None else f"{report.gcgmc_y:.4f}"
    print(f"{report.summary} (GcGMC X={gx}, Y={gy}, decision={report.decision.value})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    plan = McPlan(
        n_values=args.n,
        p_values=args.p,
        replications=args.reps,
        train_fraction=args.train_frac,
        master_seed=args.seed,
    )
    template = SimConfig(
        n=min(plan.n_values), p=min(plan.p_values),
        burn_in=args.burn_in, noise_scale=args.noise_scale,
    )
    fc = ForecastConfig(
        semimetric=SemiMetricSpec(args.deriv_order),
        refresh_bandwidths=not args.freeze_bandwidths,
    )
    result = run_monte_carlo(plan, template, fc, workers=args.workers)
    atomic_write_text(args.out, result.to_csv())
    for c in result.cells:
        print(f"n={c.n} p={c.p}: predictable {c.count_predictable}/{c.replications}, "
              f"causal {c.count_causal}/{c.replications}, undefined {c.undefined_count}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    prices = read_curves(args.input)
    if args.transform == "log-returns":
        out = log_returns(prices, midpoint=args.midpoint)
    else:
        if args.cpi is None:
            raise InputError("cpi-normalize requires --cpi <file>")
        out = cpi_normalize(prices, read_curves(args.cpi))
    write_curves(out, args.out)
    print(f"wrote {len(out)} curves on {len(out.grid)} points to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgc", description="Granger causality between two curve time series (GcGMC)."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="GcGMC for a pair of curve files")
    a.add_argument("--x", type=Path, required=True)
    a.add_argument("--y", type=Path, required=True)
    a.add_argument("--train-frac", type=float, default=0.8)
    a.add_argument("--n-train", type=int, default=None,
                   help="initial training size; overrides --train-frac")
    a.add_argument("--deriv-order", type=int, default=2)
    a.add_argument("--quantiles", type=_float_list, default=DEFAULT_QUANTILES,
                   help="bandwidth candidate probabilities, comma-separated")
    a.add_argument("--min-neighbors", type=int, default=1)
    a.add_argument("--freeze-bandwidths", action="store_true")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", type=Path, default=None)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="Monte Carlo decision counts")
    s.add_argument("--n", type=_int_list, required=True, help="sample sizes, comma-separated")
    s.add_argument("--p", type=_int_list, required=True, help="grid sizes, comma-separated")
    s.add_argument("--reps", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--train-frac", type=float, default=0.8)
    s.add_argument("--burn-in", type=int, default=50)
    s.add_argument("--noise-scale", type=float, default=0.1)
    s.add_argument("--deriv-order", type=int, default=2)
    s.add_argument("--freeze-bandwidths", action="store_true")
    s.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: FGC_THREADS or CPU count)")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="log returns or CPI normalization")
    p.add_argument("transform", choices=("log-returns", "cpi-normalize"))
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--cpi", type=Path, default=None)
    p.add_argument("--midpoint", action="store_true",
                   help="place returns at interval midpoints")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_preprocess)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"fgc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"fgc {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
