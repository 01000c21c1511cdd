"""Command-line orchestration: seeded experiments, JSON/CSV reports.

Every experiment is fully determined by its RunConfig: identical configs
reproduce metrics bit for bit (fixed summation order, per-index sample
streams), so CSV bodies are byte-identical across runs.  The report embeds
the complete effective config; only the provenance timestamp varies.

Exit codes: 0 success, 1 config/parse error, 2 numerical failure
(step-size), 3 verdict failure.
"""

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, dynamics, measures, penrose, spectral, verification

EXPERIMENTS = ("sample", "evolve", "scatter", "measure", "verify", "ensemble")


@dataclass
class RunConfig:
    experiment: str = "sample"
    alpha: float = 2.0
    N: int = 64
    M: int = 0  # 0 -> 4N
    dt: float = float(np.pi / 4096)
    seed: int = 0
    samples: int = 4
    p: float = 5.6
    q: float = 4.2
    s: float = 0.0
    sigma: float = 0.4
    workers: int = 1
    output_dir: str = "out"
    base: str = "sample"  # ensemble wrapper target
    r_min: float = 1e-3
    r_max: float = 1e4
    r_points: int = 4096
    r_log: bool = True
    T_lo: float = 0.0
    T_hi: float = float(np.pi)
    criteria: list = field(default_factory=list)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not 2.0 <= self.alpha < 3.0:
            raise ConfigError(f"alpha must lie in [2,3), got {self.alpha}")
        if self.N < 1:
            raise ConfigError(f"modes N must be >= 1, got {self.N}")
        if self.M == 0:
            self.M = 4 * self.N
        if self.M < 4 * self.N:
            raise ConfigError(f"grid M must be >= 4N = {4 * self.N}, got {self.M}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.samples < 0:
            raise ConfigError(f"samples must be nonnegative, got {self.samples}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not (-np.pi <= self.T_lo < self.T_hi <= np.pi):
            raise ConfigError(f"time span [{self.T_lo}, {self.T_hi}] must increase inside [-pi, pi]")
        if self.r_min <= 0 or self.r_max <= self.r_min or self.r_points < 2:
            raise ConfigError("radial grid needs 0 < r_min < r_max and at least 2 points")
        if self.experiment == "ensemble" and self.base not in ("sample", "evolve", "scatter"):
            raise ConfigError(f"ensemble base must be sample/evolve/scatter, got {self.base!r}")
        return self

    def radial_grid(self):
        if self.r_log:
            return np.logspace(np.log10(self.r_min), np.log10(self.r_max), self.r_points)
        return np.linspace(self.r_min, self.r_max, self.r_points)

    def flow_config(self, **overrides):
        kwargs = dict(
            alpha=self.alpha, N=self.N, M=self.M, dt=self.dt,
            T_span=(self.T_lo, self.T_hi), sigma=self.sigma,
        )
        kwargs.update(overrides)
        return dynamics.FlowConfig(**kwargs)


class ConfigError(ValueError):
    pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zonalwave",
        description="Seeded spectral experiments for the compactified radial wave equation",
    )
    parser.add_argument("--config", type=str, default=None, help="JSON config file (flags override)")
    parser.add_argument("--experiment", type=str, default=None, choices=EXPERIMENTS)
    parser.add_argument("--alpha", type=float, default=None, help="nonlinearity power in [2,3)")
    parser.add_argument("--modes", type=int, default=None, dest="N", help="Galerkin mode count N")
    parser.add_argument("--grid", type=int, default=None, dest="M", help="collocation size M (>= 4N)")
    parser.add_argument("--dt", type=float, default=None, help="time step (radians)")
    parser.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    parser.add_argument("--samples", type=int, default=None, help="ensemble size")
    parser.add_argument("--out", type=str, default=None, dest="output_dir", help="output directory")
    parser.add_argument("--p", type=float, default=None, help="space-time exponent")
    parser.add_argument("--q", type=float, default=None, help="decay-norm exponent")
    parser.add_argument("--s", type=float, default=None, help="Sobolev multiplier exponent")
    parser.add_argument("--sigma", type=float, default=None, help="data regularity index")
    parser.add_argument("--workers", type=int, default=None, help="ensemble worker processes")
    parser.add_argument("--base", type=str, default=None, help="base experiment for ensemble")
    parser.add_argument("--criteria", type=str, default=None, help="comma-separated acceptance ids for verify")
    return parser


def parse_config(argv):
    """Build a validated RunConfig from flags and an optional JSON file."""
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config!r} is not valid JSON: {exc}") from exc
        known = set(cfg.__dataclass_fields__)
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for name in (
        "experiment", "alpha", "N", "M", "dt", "seed", "samples",
        "output_dir", "p", "q", "s", "sigma", "workers", "base",
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.criteria is not None:
        cfg.criteria = [c.strip() for c in args.criteria.split(",") if c.strip()]
    return cfg.validate()


def _fmt(value):
    if isinstance(value, (np.floating, float)):
        return format(float(value), ".17g")
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_report(out_dir, config, metrics, verdicts):
    report = {
        "config": asdict(config),
        "metrics": metrics,
        "provenance": {
            "toolkit_version": __version__,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "seed": config.seed,
        },
        "verdicts": verdicts,
    }
    path = Path(out_dir) / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    return report


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


# ----------------------------------------------------------------------
# per-sample metric rows (shared by sample/ensemble experiments)


def _sample_row(cfg, index):
    smp = measures.sample_mu(measures.RngStreamSpec(cfg.seed, index), cfg.N)
    field_vals = spectral.synthesize(np.real(smp.u) + 0j, cfg.M)
    return {
        "sample_index": index,
        "h_sigma_norm": float(spectral.sobolev_norm(smp.u, cfg.sigma)),
        "re_lp_norm": float(spectral.lp_norm(field_vals, cfg.p)),
        "gibbs_weight": float(measures.density_weight(smp.u, cfg.alpha, cfg.M, truncate_N=cfg.N)),
    }


def _evolve_row(cfg, index):
    u0 = measures.sample_mu(measures.RngStreamSpec(cfg.seed, index), cfg.N).u
    traj = dynamics.evolve(u0, cfg.flow_config(store_every=16))
    report = dynamics.energy_derivative_check(traj)
    return {
        "sample_index": index,
        "energy_initial": report.E0,
        "energy_rel_drift": report.rel_drift,
        "monotone_ok": int(report.monotone_ok),
        "final_h_sigma": float(spectral.sobolev_norm(traj.states[-1], cfg.sigma)),
    }


def _scatter_row(cfg, index):
    t_grid = np.geomspace(10.0, 1e3, 13)
    u0 = measures.sample_mu(measures.RngStreamSpec(cfg.seed, index), cfg.N).u
    flow = cfg.flow_config(T_span=(0.0, float(np.pi)))
    traj = dynamics.evolve(u0, flow)
    sd = dynamics.scattering_data(traj)
    interp = dynamics.TrajectoryInterpolant(traj)
    free = dynamics.LinearFlow(sd.u_inf)
    r_grid = cfg.radial_grid()
    norms = []
    for t in t_grid:
        f = penrose.physical_field(interp, t, r_grid)
        lf = penrose.physical_field(free, t, r_grid)
        norms.append(penrose.radial_lq_norm(f - lf, r_grid, cfg.q))
    fit = diagnostics.loglog_fit(t_grid, np.array(norms))
    return {
        "sample_index": index,
        "decay_slope": fit.slope,
        "decay_r_squared": fit.r_squared,
        "duhamel_discrepancy": sd.duhamel_discrepancy,
    }


_ROW_BUILDERS = {"sample": _sample_row, "evolve": _evolve_row, "scatter": _scatter_row}


def _rows_chunk(payload):
    cfg_dict, base, indices = payload
    cfg = RunConfig(**cfg_dict)
    builder = _ROW_BUILDERS[base]
    return [builder(cfg, i) for i in indices]


def collect_rows(cfg, base, indices):
    """Per-sample metric rows, optionally fanned over worker processes.

    Rows are merged in sample-index order regardless of scheduling.
    """
    if cfg.workers <= 1 or len(indices) < 2 * cfg.workers:
        return [_ROW_BUILDERS[base](cfg, i) for i in indices]
    chunks = np.array_split(np.asarray(indices), cfg.workers)
    payloads = [(asdict(cfg), base, chunk.tolist()) for chunk in chunks if chunk.size]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_rows_chunk, payloads))
    rows = [row for part in parts for row in part]
    rows.sort(key=lambda r: r["sample_index"])
    return rows


# ----------------------------------------------------------------------
# experiments


def run_sample(cfg, out):
    rows = collect_rows(cfg, "sample", list(range(cfg.samples)))
    header = list(rows[0].keys()) if rows else ["sample_index"]
    write_csv(out / "ensemble.csv", header, [[r[k] for k in header] for r in rows])
    weights = [r["gibbs_weight"] for r in rows]
    metrics = {
        "mean_h_sigma": float(np.mean([r["h_sigma_norm"] for r in rows])) if rows else 0.0,
        "mean_gibbs_weight": float(np.mean(weights)) if weights else 0.0,
    }
    verdicts = {
        "weights_in_unit_interval": {
            "passed": bool(all(0.0 < w <= 1.0 for w in weights)),
            "tolerance": "(0, 1]",
        }
    }
    return metrics, verdicts


def run_evolve(cfg, out):
    u0 = measures.sample_mu(measures.RngStreamSpec(cfg.seed, 0), cfg.N).u
    traj = dynamics.evolve(u0, cfg.flow_config())
    report = dynamics.energy_derivative_check(traj)
    header = ["T"]
    for n in range(1, cfg.N + 1):
        header += [f"c_{n}_re", f"c_{n}_im"]
    header.append("energy")
    rows = []
    for k, Tk in enumerate(traj.times):
        row = [Tk]
        state = traj.states[k]
        for n in range(cfg.N):
            row += [state[n].real, state[n].imag]
        row.append(traj.energies[k])
        rows.append(row)
    write_csv(out / "trajectory.csv", header, rows)
    metrics = {
        "energy_initial": report.E0,
        "energy_rel_drift": report.rel_drift,
        "deriv_mismatch": report.deriv_mismatch,
        "dt_used": traj.dt_used,
        "halvings": traj.halvings,
    }
    verdicts = {
        "energy_monotone": {"passed": report.monotone_ok, "tolerance": "1e-8 relative slack"},
    }
    if cfg.alpha == 2.0:
        verdicts["energy_conserved"] = {
            "passed": bool(report.rel_drift < 1e-8),
            "value": report.rel_drift,
            "tolerance": "< 1e-8 relative",
        }
    return metrics, verdicts


def run_scatter(cfg, out):
    t_grid = np.geomspace(10.0, 1e3, 13)
    fit = diagnostics.scattering_fit(
        seed=cfg.seed, N=cfg.N, alpha=cfg.alpha, q=cfg.q, t_grid=t_grid,
        samples=max(1, cfg.samples), dt=cfg.dt, r_grid=cfg.radial_grid(),
    )
    header = ["t"] + [f"norm_sample_{k}" for k in range(fit.norms.shape[0])]
    rows = [[t] + list(fit.norms[:, i]) for i, t in enumerate(t_grid)]
    write_csv(out / "scatter.csv", header, rows)
    target = -2.0 / cfg.q + 0.1
    metrics = {
        "median_decay_slope": fit.median_slope,
        "eventually_decreasing_fraction": fit.eventually_decreasing_fraction,
        "max_duhamel_discrepancy": float(fit.duhamel_discrepancies.max()),
    }
    verdicts = {
        "decay_rate": {
            "passed": bool(fit.median_slope <= target),
            "value": fit.median_slope,
            "tolerance": f"<= {target:.4f}",
        }
    }
    return metrics, verdicts


def run_measure(cfg, out):
    mass, mass_se = measures.rho_mass_estimate(cfg.seed, cfg.N, cfg.alpha, max(100, cfg.samples))
    est = measures.tail_probability(
        seed=cfg.seed + 1, N=cfg.N, N0=1, s=cfg.s, p=max(cfg.p, 2.0),
        lambda_grid=np.linspace(0.8, 3.2, 25), samples=max(1000, cfg.samples),
    )
    ratios = measures.moment_growth(
        1.0 / np.arange(1, cfg.N + 1, dtype=float), [2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        samples=max(1000, cfg.samples), seed=cfg.seed + 2,
    )
    write_csv(
        out / "tails.csv",
        ["lambda", "prob", "ci", "in_fit_region"],
        [[l, p_, c, int(m)] for l, p_, c, m in zip(est.lambda_grid, est.prob, est.ci, est.fit_mask)],
    )
    metrics = {
        "rho_mass": mass,
        "rho_mass_stderr": mass_se,
        "tail_fit_slope": est.fit_slope,
        "tail_fit_r_squared": est.fit_r_squared,
        "max_moment_ratio": float(np.max(ratios)),
    }
    verdicts = {
        "tail_subgaussian": {
            "passed": bool(est.fit_slope < 0 and est.fit_r_squared > 0.95),
            "tolerance": "slope < 0, R^2 > 0.95",
        },
        "moment_ratio_bounded": {
            "passed": bool(np.max(ratios) <= 1.1),
            "value": float(np.max(ratios)),
            "tolerance": "<= 1.1",
        },
    }
    return metrics, verdicts


def run_verify(cfg, out):
    ids = cfg.criteria or None
    results = verification.run_all(ids=ids, echo=True)
    write_csv(
        out / "acceptance.csv",
        ["criterion", "passed", "seconds"],
        [[r.name, int(r.passed), round(r.seconds, 2)] for r in results],
    )
    metrics = {r.name: r.values for r in results}
    verdicts = {r.name: {"passed": r.passed, "tolerance": r.summary} for r in results}
    return metrics, verdicts


def run_ensemble(cfg, out):
    rows = collect_rows(cfg, cfg.base, list(range(cfg.samples)))
    header = list(rows[0].keys()) if rows else ["sample_index"]
    write_csv(out / "ensemble.csv", header, [[r[k] for k in header] for r in rows])
    numeric = {
        k: float(np.mean([r[k] for r in rows]))
        for k in header
        if k != "sample_index" and rows and isinstance(rows[0][k], (int, float))
    }
    return {"base": cfg.base, "rows": len(rows), "means": numeric}, {}


RUNNERS = {
    "sample": run_sample,
    "evolve": run_evolve,
    "scatter": run_scatter,
    "measure": run_measure,
    "verify": run_verify,
    "ensemble": run_ensemble,
}


def run(cfg):
    """Execute the configured experiment; returns (report dict, exit code)."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        metrics, verdicts = RUNNERS[cfg.experiment](cfg, out)
    except dynamics.StepSizeError as exc:
        report = write_report(out, cfg, {"error": str(exc)}, {})
        print(f"numerical failure: {exc}", file=sys.stderr)
        return report, 2
    report = write_report(out, cfg, metrics, verdicts)
    failed = [name for name, v in verdicts.items() if not v["passed"]]
    if failed:
        print(f"verdicts failed: {', '.join(failed)}", file=sys.stderr)
        return report, 3
    return report, 0


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    _, code = run(cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
