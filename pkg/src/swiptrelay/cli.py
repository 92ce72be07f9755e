"""Command-line driver: sweeps to CSV, theta optimisation, verification suite.

Configuration comes from an optional INI-style file (sections ``system``,
``correlation``, ``sweep``) with command-line flags taking precedence.
Power and threshold are given in dB here and converted once.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import sys
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence, TextIO

import numpy as np

from . import analytic
from .channel import CsiMode, SystemParams, db_to_linear
from .corrmat import CorrelationModel, exp_correlation
from .mc import StreamSpec, estimate_grid
from .specfun import QuadratureError

CSV_HEADER = ["mode", "metric", "method", "rho_db", "theta", "n_antennas", "r_rx", "r_tx",
              "value", "stderr", "n_samples", "seed"]
THETA_HEADER = ["rho_db", "theta_star", "value", "value_at_half"]

METRICS = ("outage", "capacity")
METHODS = ("mc", "exact", "lower-bound", "high-snr", "upper-bound")
_ANALYTIC_SUPPORT = {
    ("outage", "exact"): {CsiMode.INSTANTANEOUS, CsiMode.STATISTICAL},
    ("outage", "lower-bound"): {CsiMode.INSTANTANEOUS},
    ("outage", "high-snr"): {CsiMode.INSTANTANEOUS, CsiMode.STATISTICAL},
    ("capacity", "upper-bound"): {CsiMode.INSTANTANEOUS, CsiMode.STATISTICAL},
}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class CorrSpec:
    """Exponential model (r_rx, r_tx) or explicit matrices loaded from files."""
    r_rx: float | None = 0.5
    r_tx: float | None = 0.8
    rx_matrix: np.ndarray | None = field(default=None, compare=False)
    tx_matrix: np.ndarray | None = field(default=None, compare=False)

    def models(self, n: int) -> tuple[CorrelationModel, CorrelationModel]:
        rx = CorrelationModel(self.rx_matrix) if self.rx_matrix is not None else exp_correlation(n, self.r_rx)
        tx = CorrelationModel(self.tx_matrix) if self.tx_matrix is not None else exp_correlation(n, self.r_tx)
        if rx.n != n or tx.n != n:
            raise ConfigError("correlation", f"matrix size does not match n_antennas={n}")
        return rx, tx


@dataclass(frozen=True)
class SweepConfig:
    modes: tuple = (CsiMode.INSTANTANEOUS, CsiMode.STATISTICAL, CsiMode.NOCSI)
    metric: str = "outage"
    method: str = "mc"
    rho_db: tuple = ()
    params: SystemParams = SystemParams()
    corr: CorrSpec = CorrSpec()
    mc_samples: int = 1_000_000
    seed: int = 1
    workers: int = 1

    def validate(self) -> "SweepConfig":
        if not self.rho_db:
            raise ConfigError("rho_db", "grid is empty")
        if not all(math.isfinite(r) for r in self.rho_db):
            raise ConfigError("rho_db", "grid values must be finite")
        if not self.modes:
            raise ConfigError("mode", "no CSI mode selected")
        if self.metric not in METRICS:
            raise ConfigError("metric", f"must be one of {', '.join(METRICS)}")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {', '.join(METHODS)}")
        if self.method != "mc":
            ok = _ANALYTIC_SUPPORT.get((self.metric, self.method))
            if ok is None:
                raise ConfigError("method", f"{self.method} is not available for {self.metric}")
            bad = [m.value for m in self.modes if m not in ok]
            if bad:
                raise ConfigError("method", f"{self.method} {self.metric} unavailable for mode "
                                  f"{', '.join(bad)} (use mc)")
        if self.mc_samples < 1000:
            raise ConfigError("samples", "need at least 1000 Monte Carlo samples")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        return self


def parse_grid(text: str) -> tuple:
    """'start:stop:step' (inclusive) or a comma-separated list of dB values."""
    text = str(text).strip()
    if not text:
        return ()
    try:
        if ":" in text:
            parts = [float(t) for t in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0:
                raise ConfigError("rho_db", "step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(max(count, 0)))
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError("rho_db", f"cannot parse grid {text!r}") from None


def parse_modes(text: str) -> tuple:
    text = str(text).strip().lower()
    if text == "all":
        return tuple(CsiMode)
    try:
        return tuple(CsiMode.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError("mode", str(exc)) from None


def _load_matrix(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=complex, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError("correlation", f"cannot read matrix file {path!r}: {exc}") from None


def load_config(path: str | None, args: argparse.Namespace | None = None) -> SweepConfig:
    """Build a SweepConfig from an INI file and flag overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path:
        if not cp.read(path, encoding="utf-8"):
            raise ConfigError("config", f"cannot read {path!r}")
    sysc = cp["system"] if cp.has_section("system") else {}
    corc = cp["correlation"] if cp.has_section("correlation") else {}
    swc = cp["sweep"] if cp.has_section("sweep") else {}

    def num(section, key, default, cast=float):
        try:
            return cast(section.get(key, default))
        except (TypeError, ValueError):
            raise ConfigError(key, f"invalid value {section.get(key)!r}") from None

    try:
        params = SystemParams.from_db(
            gamma_th_db=num(sysc, "gamma_th_db", 0.0),
            eta=num(sysc, "eta", 0.8), theta=num(sysc, "theta", 0.5),
            tau=num(sysc, "tau", 2.5), d1=num(sysc, "d1", 3.0), d2=num(sysc, "d2", 3.0),
            n=num(sysc, "n_antennas", 3, int))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("system", str(exc)) from None

    rx_file, tx_file = corc.get("rx_matrix_file"), corc.get("tx_matrix_file")
    corr = CorrSpec(
        r_rx=None if rx_file else num(corc, "r_rx", 0.5),
        r_tx=None if tx_file else num(corc, "r_tx", 0.8),
        rx_matrix=_load_matrix(rx_file) if rx_file else None,
        tx_matrix=_load_matrix(tx_file) if tx_file else None)

    cfg = SweepConfig(
        modes=parse_modes(swc.get("modes", "all")),
        metric=str(swc.get("metric", "outage")).strip(),
        method=str(swc.get("method", "mc")).strip(),
        rho_db=parse_grid(swc.get("rho_db", "0:40:5")),
        params=params, corr=corr,
        mc_samples=num(swc, "samples", 1_000_000, int),
        seed=num(swc, "seed", 1, int),
        workers=num(swc, "workers", 1, int))

    if args is not None:
        over = {}
        if getattr(args, "rho_db", None) is not None:
            over["rho_db"] = parse_grid(args.rho_db)
        if getattr(args, "mode", None) is not None:
            over["modes"] = parse_modes(args.mode)
        if getattr(args, "metric", None) is not None:
            over["metric"] = args.metric
        if getattr(args, "method", None) is not None:
            over["method"] = args.method
        if getattr(args, "samples", None) is not None:
            over["mc_samples"] = args.samples
        if getattr(args, "seed", None) is not None:
            over["seed"] = args.seed
        if getattr(args, "workers", None) is not None:
            over["workers"] = args.workers
        cfg = replace(cfg, **over)
    return cfg


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _analytic_value(cfg: SweepConfig, mode: CsiMode, er, et, rho: float) -> float:
    p = cfg.params
    if cfg.metric == "capacity":
        return analytic.capacity_upper_bound(mode, p, er, et, rho)
    if cfg.method == "exact":
        fn = analytic.outage_exact_inst if mode is CsiMode.INSTANTANEOUS else analytic.outage_exact_stat
        return fn(p, er, et, rho)
    if cfg.method == "lower-bound":
        return analytic.outage_lb_inst(p, er, et, rho)
    fn = analytic.outage_highsnr_inst if mode is CsiMode.INSTANTANEOUS else analytic.outage_highsnr_stat
    return fn(p, er, et, rho)


def sweep_rows(cfg: SweepConfig, diag: TextIO = sys.stderr) -> list[list[str]]:
    cfg.validate()
    corr_r, corr_t = cfg.corr.models(cfg.params.n)
    rhos = [db_to_linear(r) for r in cfg.rho_db]
    common = [_fmt(cfg.params.theta), str(cfg.params.n), _fmt(cfg.corr.r_rx), _fmt(cfg.corr.r_tx)]
    rows = []
    if cfg.method == "mc":
        est = estimate_grid(cfg.modes, cfg.metric, cfg.params, corr_r, corr_t, rhos,
                            cfg.mc_samples, StreamSpec(cfg.seed), cfg.workers)
        for mode in cfg.modes:
            for db, rho in zip(cfg.rho_db, rhos):
                e = est[(mode, float(rho))]
                rows.append([mode.value, cfg.metric, cfg.method, _fmt(db), *common,
                             _fmt(e.mean), _fmt(e.stderr), str(e.n), str(cfg.seed)])
        return rows
    er, et = corr_r.eigen(), corr_t.eigen()
    for mode in cfg.modes:
        for db, rho in zip(cfg.rho_db, rhos):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                try:
                    v = _analytic_value(cfg, mode, er, et, rho)
                except QuadratureError as exc:
                    v = math.nan
                    print(f"warning: {mode.value} {cfg.method} at {db} dB: {exc}", file=diag)
            for w in caught:
                print(f"warning: {mode.value} at {db} dB: {w.message}", file=diag)
            rows.append([mode.value, cfg.metric, cfg.method, _fmt(db), *common,
                         _fmt(v), "", "", ""])
    return rows


def run_sweep(cfg: SweepConfig, out: TextIO, diag: TextIO = sys.stderr) -> int:
    """Write the sweep CSV to ``out``; returns the number of data rows."""
    rows = sweep_rows(cfg, diag)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    return len(rows)


def read_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def run_optimize_theta(cfg: SweepConfig, out: TextIO) -> int:
    if len(cfg.modes) != 1 or cfg.modes[0] is CsiMode.NOCSI:
        raise ConfigError("mode", "optimize-theta needs exactly one of instantaneous, statistical")
    if not cfg.rho_db:
        raise ConfigError("rho_db", "grid is empty")
    mode = cfg.modes[0]
    corr_r, corr_t = cfg.corr.models(cfg.params.n)
    er, et = corr_r.eigen(), corr_t.eigen()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(THETA_HEADER)
    for db in cfg.rho_db:
        rho = db_to_linear(db)
        th, val = analytic.optimize_theta(mode, cfg.params, er, et, rho)
        half = analytic.capacity_upper_bound(mode, cfg.params.with_(theta=0.5), er, et, rho)
        w.writerow([_fmt(db), _fmt(th), _fmt(val), _fmt(half)])
    return len(cfg.rho_db)


def corr_info(n: int, r: float | None, matrix: np.ndarray | None, tol: float, out: TextIO):
    from .analytic.hypoexp import partial_fraction_weights
    from .corrmat import principal_weight

    model = CorrelationModel(matrix) if matrix is not None else exp_correlation(n, r)
    e = model.eigen(tol)
    print(f"n = {model.n}", file=out)
    print("eigenvalues (raw):     " + " ".join(f"{v:.12g}" for v in e.raw_values), file=out)
    print("eigenvalues (guarded): " + " ".join(f"{v:.12g}" for v in e.values), file=out)
    print("tail weights (k=N-1):  " + " ".join(f"{v:.12g}" for v in partial_fraction_weights(e.values, model.n - 1)), file=out)
    print("pdf weights (k=N-2):   " + " ".join(f"{v:.12g}" for v in partial_fraction_weights(e.values, model.n - 2)), file=out)
    try:
        pw = principal_weight(e)
        print("principal vector:      " + " ".join(f"{complex(v):.10g}" for v in pw), file=out)
    except ValueError as exc:
        print(f"principal vector:      unavailable ({exc})", file=out)


def _sweep_args(sp: argparse.ArgumentParser, with_method: bool = True):
    sp.add_argument("--config", help="INI file with [system], [correlation], [sweep] sections")
    sp.add_argument("--rho-db", help="grid 'start:stop:step' (inclusive) or comma list")
    sp.add_argument("--mode", help="comma list of instantaneous, statistical, nocsi, or 'all'")
    if with_method:
        sp.add_argument("--metric", choices=METRICS)
        sp.add_argument("--method", choices=METHODS)
        sp.add_argument("--samples", type=int, help="Monte Carlo sample count")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
    sp.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swiptrelay",
                                 description="Outage and capacity of SWIPT AF relays with correlated antennas")
    sub = ap.add_subparsers(dest="command", required=True)
    _sweep_args(sub.add_parser("sweep", help="evaluate a metric over an SNR grid, write CSV"))
    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    _sweep_args(sub.add_parser("optimize-theta", help="optimal power-splitting ratio per SNR"),
                with_method=False)
    c = sub.add_parser("corr-info", help="eigenvalues and weights of a correlation spec")
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--r", type=float, default=0.5, help="exponential correlation coefficient")
    c.add_argument("--matrix-file", help="whitespace-separated (complex) matrix instead of --r")
    c.add_argument("--tol", type=float, default=1e-6, help="eigenvalue distinctness tolerance")
    return ap


def _write_output(path: str | None, producer) -> int:
    buf = io.StringIO()
    count = producer(buf)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return count


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            cfg = load_config(args.config, args).validate()
            _write_output(args.out, lambda f: run_sweep(cfg, f))
            return 0
        if args.command == "optimize-theta":
            cfg = load_config(args.config, args)
            _write_output(args.out, lambda f: run_optimize_theta(cfg, f))
            return 0
        if args.command == "corr-info":
            matrix = _load_matrix(args.matrix_file) if args.matrix_file else None
            corr_info(args.n, args.r, matrix, args.tol, sys.stdout)
            return 0
        if args.command == "verify":
            from .acceptance import format_result, run_all
            ok = True
            for res in run_all(args.level):
                print(format_result(res), flush=True)
                ok &= res.passed
            return 0 if ok else 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1
