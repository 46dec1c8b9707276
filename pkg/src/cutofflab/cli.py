"""Command-line front end: sweeps, caching and CSV/JSON emission.

Exit codes: 0 success, 1 invalid configuration (including unknown flags),
2 numerical failure.  Every output file starts with a provenance line
carrying the tool version and a hash of the fully resolved configuration,
so re-runs with identical inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .cutoff import CutoffAnalyzer, CutoffProblem
from .errors import CutoffLabError, InvalidInput
from .montecarlo import SimConfig, empirical_distance, simulate_paths
from .phase import PhaseSystem, default_horizon, integrate_phase
from .potential import Potential
from .spectrum import (
    SOLVER_VERSION,
    EigenSystem,
    Grid,
    load_eigensystem,
    save_eigensystem,
    solve_eigensystem,
)
from .wkb import build_coeff_table

__all__ = ["cli", "main", "cache_lookup", "load_config"]

CACHE_ENV_VAR = "CUTOFFLAB_CACHE_DIR"


def load_config(path: str | Path | None) -> dict[str, str]:
    """Flat ``key = value`` configuration file, UTF-8, '#' comments."""
    if path is None:
        return {}
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve(flag_value, config: dict[str, str], key: str, cast, default):
    """Precedence: defaults < config file < flags."""
    if flag_value is not None:
        return flag_value
    if key in config:
        return cast(config[key])
    return default


def _config_hash(resolved: dict) -> str:
    payload = json.dumps(resolved, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _provenance(resolved: dict) -> str:
    return f"# cutofflab {__version__} solver={SOLVER_VERSION} config={_config_hash(resolved)}"


def _write_csv(path: Path, provenance: str, header: list[str], rows) -> None:
    lines = [provenance, ",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cache_dir(explicit: str | None, config: dict[str, str]) -> Path:
    import os

    if explicit:
        return Path(explicit)
    if "cache_dir" in config:
        return Path(config["cache_dir"])
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "cutofflab"


def cache_lookup(
    p: Potential, n_modes: int, cache_dir: Path, grid: Grid | None = None
) -> EigenSystem:
    """Cached eigensolve keyed by (gamma, half-width, points, modes, solver).

    A hit requires the key fields and the solver version to match; corrupt
    files are recomputed and overwritten with a warning, version bumps are
    silent misses.
    """
    if grid is None:
        from .spectrum import default_grid

        grid = default_grid(p, n_modes)
    key = f"{p.gamma:.12g}|{grid.half_width:.12g}|{grid.n_points}|{n_modes}|{SOLVER_VERSION}"
    digest = hashlib.sha256(key.encode()).hexdigest()[:16]
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"eigsys_{digest}.json"
    if path.exists():
        try:
            es = load_eigensystem(path)
            if (
                f"{es.gamma:.12g}" == f"{p.gamma:.12g}"
                and f"{es.grid.half_width:.12g}" == f"{grid.half_width:.12g}"
                and es.grid.n_points == grid.n_points
                and es.n_modes == n_modes
            ):
                return es
        except InvalidInput:
            pass  # version or schema mismatch: plain miss
        except (json.JSONDecodeError, OSError, KeyError, ValueError):
            warnings.warn(f"corrupt eigen cache {path.name}; recomputing", stacklevel=2)
    es = solve_eigensystem(p, n_modes, grid=grid)
    save_eigensystem(es, path)
    return es


def _analyzer(gamma, x0, n, eps_min, eps_points, cache_dir) -> CutoffAnalyzer:
    p = Potential(gamma)
    es = cache_lookup(p, max(n, 1), cache_dir)
    grid = tuple(np.geomspace(1.0, eps_min, eps_points))
    problem = CutoffProblem(gamma=gamma, x0=x0, n=n, epsilon_grid=grid)
    return CutoffAnalyzer(es, problem)


@click.group()
@click.version_option(version=__version__, prog_name="cutofflab")
def cli() -> None:
    """Spectral cut-off laboratory for small-noise Langevin dynamics."""


@cli.command("spectrum")
@click.option("--gamma", type=float, default=None)
@click.option("--n-modes", type=int, default=None)
@click.option("--half-width", type=float, default=None)
@click.option("--n-points", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
def spectrum_cmd(gamma, n_modes, half_width, n_points, config_path, output_dir, cache_dir):
    """Eigenvalues and parities of the unit-noise generator."""
    config = load_config(config_path)
    gamma = _resolve(gamma, config, "gamma", float, None)
    if gamma is None:
        raise click.UsageError("--gamma is required")
    n_modes = _resolve(n_modes, config, "n_modes", int, 5)
    half_width = _resolve(half_width, config, "half_width", float, None)
    n_points = _resolve(n_points, config, "n_points", int, None)
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))
    cdir = _cache_dir(cache_dir, config)

    p = Potential(gamma)
    grid = None
    if half_width is not None and n_points is not None:
        grid = Grid(half_width, n_points)
    es = cache_lookup(p, n_modes, cdir, grid=grid)
    resolved = {
        "command": "spectrum",
        "gamma": gamma,
        "n_modes": n_modes,
        "half_width": es.grid.half_width,
        "n_points": es.grid.n_points,
    }
    rows = [
        (k, float(es.eigenvalues[k]), es.parities[k]) for k in range(n_modes + 1)
    ]
    _write_csv(out_dir / "spectrum.csv", _provenance(resolved), ["k", "eigenvalue", "parity"], rows)
    click.echo(f"wrote {out_dir / 'spectrum.csv'}")


@cli.command("wkb-table")
@click.option("--n-max", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
def wkb_table_cmd(n_max, config_path, output_dir):
    """Exact growth-ladder coefficient table as CSV."""
    config = load_config(config_path)
    n_max = _resolve(n_max, config, "n_max", int, 6)
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))
    table = build_coeff_table(n_max)
    resolved = {"command": "wkb-table", "n_max": n_max}
    rows = []
    for n in range(1, n_max + 1):
        for i in range(1, n + 1):
            poly = table[(n, i)]
            rows.append((n, i, n + i - 1, n - i, ";".join(str(c) for c in poly.coeffs)))
    _write_csv(
        out_dir / "wkb_table.csv",
        _provenance(resolved),
        ["n", "i", "a", "b", "coeff_poly_as_rationals"],
        rows,
    )
    click.echo(f"wrote {out_dir / 'wkb_table.csv'}")


@cli.command("phase-portrait")
@click.option("--f-exponent", type=float, default=None)
@click.option("--g-const", type=float, default=None)
@click.option("--t-start", type=float, default=None)
@click.option("--theta0", type=float, multiple=True)
@click.option("--horizon", type=float, default=None)
@click.option("--step", type=float, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
def phase_portrait_cmd(
    f_exponent, g_const, t_start, theta0, horizon, step, threads, config_path, output_dir
):
    """Integrate angle trajectories and emit (t, theta, log_r) per trajectory."""
    config = load_config(config_path)
    f_exponent = _resolve(f_exponent, config, "f_exponent", float, 0.5)
    g_const = _resolve(g_const, config, "g_const", float, 1.0)
    step = _resolve(step, config, "step", float, 1e-3)
    threads = _resolve(threads, config, "threads", int, 1)
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))
    if t_start is None:
        t_start = _resolve(None, config, "t_start", float, None)
    if t_start is None:
        # just past the discriminant zero f^2 = 4 g
        t_start = 1.05 * (4.0 * max(g_const, 1e-12)) ** (1.0 / (2.0 * f_exponent))
    sys_ = PhaseSystem.power_drift(f_exponent, g_const, t_start)
    horizon = _resolve(horizon, config, "horizon", float, None) or default_horizon(sys_)
    angles = list(theta0) or [0.3, 0.8]
    resolved = {
        "command": "phase-portrait",
        "f_exponent": f_exponent,
        "g_const": g_const,
        "t_start": t_start,
        "horizon": horizon,
        "step": step,
        "theta0": list(angles),
    }

    def run(idx_angle):
        idx, angle = idx_angle
        traj = integrate_phase(sys_, angle, horizon, step=step)
        return idx, angle, traj

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = sorted(pool.map(run, enumerate(angles)), key=lambda r: r[0])
    for idx, angle, traj in results:
        rows = zip(
            (float(v) for v in traj.times),
            (float(v) for v in traj.theta),
            (float(v) for v in traj.log_r),
        )
        meta = dict(resolved, trajectory=idx, theta0_value=angle)
        _write_csv(
            out_dir / f"phase_portrait_{idx:02d}.csv",
            _provenance(meta),
            ["t", "theta", "log_r"],
            rows,
        )
    click.echo(f"wrote {len(results)} trajectory files to {out_dir}")


@cli.command("cutoff-profile")
@click.option("--gamma", type=float, default=None)
@click.option("--x0", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--r-min", type=float, default=None)
@click.option("--r-max", type=float, default=None)
@click.option("--r-points", type=int, default=None)
@click.option("--eps-min", type=float, default=None)
@click.option("--eps-points", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
def cutoff_profile_cmd(
    gamma, x0, n, r_min, r_max, r_points, eps_min, eps_points, threads,
    config_path, output_dir, cache_dir,
):
    """Distance along cut-off time plus r * window, per epsilon."""
    config = load_config(config_path)
    gamma = _resolve(gamma, config, "gamma", float, None)
    if gamma is None:
        raise click.UsageError("--gamma is required")
    x0 = _resolve(x0, config, "x0", float, 2.0)
    n = _resolve(n, config, "n", int, 3)
    r_min = _resolve(r_min, config, "r_min", float, -2.0)
    r_max = _resolve(r_max, config, "r_max", float, 2.0)
    r_points = _resolve(r_points, config, "r_points", int, 17)
    eps_min = _resolve(eps_min, config, "eps_min", float, 1e-4)
    eps_points = _resolve(eps_points, config, "eps_points", int, 17)
    threads = _resolve(threads, config, "threads", int, 1)
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))
    analyzer = _analyzer(gamma, x0, n, eps_min, eps_points, _cache_dir(cache_dir, config))
    r_grid = np.linspace(r_min, r_max, r_points)
    resolved = {
        "command": "cutoff-profile", "gamma": gamma, "x0": x0, "n": n,
        "r_min": r_min, "r_max": r_max, "r_points": r_points,
        "eps_min": eps_min, "eps_points": eps_points,
    }

    def per_eps(eps):
        t_eps, _ = analyzer.cutoff_time(eps)
        w = analyzer.problem.window(eps)
        return eps, [
            (eps, float(r), analyzer._distance_signed_time(eps, t_eps + r * w).log_abs)
            for r in r_grid
        ]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        chunks = dict(pool.map(per_eps, analyzer.problem.epsilon_grid))
    rows = []
    for eps in analyzer.problem.epsilon_grid:
        rows.extend(chunks[eps])
    _write_csv(
        out_dir / "cutoff_profile.csv",
        _provenance(resolved),
        ["epsilon", "r", "distance_log"],
        rows,
    )
    click.echo(f"wrote {out_dir / 'cutoff_profile.csv'}")


@cli.command("mixing-time")
@click.option("--gamma", type=float, default=None)
@click.option("--x0", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--eta", type=float, multiple=True)
@click.option("--eps-min", type=float, default=None)
@click.option("--eps-points", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
def mixing_time_cmd(
    gamma, x0, n, eta, eps_min, eps_points, threads, config_path, output_dir, cache_dir
):
    """Eta-mixing times along the noise grid."""
    config = load_config(config_path)
    gamma = _resolve(gamma, config, "gamma", float, None)
    if gamma is None:
        raise click.UsageError("--gamma is required")
    x0 = _resolve(x0, config, "x0", float, 2.0)
    n = _resolve(n, config, "n", int, 3)
    etas = list(eta) or [float(v) for v in config.get("eta", "0.5,0.1,0.01").split(",")]
    eps_min = _resolve(eps_min, config, "eps_min", float, 1e-4)
    eps_points = _resolve(eps_points, config, "eps_points", int, 17)
    threads = _resolve(threads, config, "threads", int, 1)
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))
    analyzer = _analyzer(gamma, x0, n, eps_min, eps_points, _cache_dir(cache_dir, config))
    resolved = {
        "command": "mixing-time", "gamma": gamma, "x0": x0, "n": n,
        "eta": etas, "eps_min": eps_min, "eps_points": eps_points,
    }

    def per_eps(eps):
        t_eps, _ = analyzer.cutoff_time(eps)
        w = analyzer.problem.window(eps)
        return eps, [
            (eps, e, analyzer.mixing_time(eps, e), t_eps, w) for e in etas
        ]

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        chunks = dict(pool.map(per_eps, analyzer.problem.epsilon_grid))
    rows = []
    for eps in analyzer.problem.epsilon_grid:
        rows.extend(chunks[eps])
    _write_csv(
        out_dir / "mixing_time.csv",
        _provenance(resolved),
        ["epsilon", "eta", "tau", "t_eps", "w_eps"],
        rows,
    )
    click.echo(f"wrote {out_dir / 'mixing_time.csv'}")


@cli.command("regime")
@click.option("--gamma", type=float, default=None)
@click.option("--x0", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--eps-min", type=float, default=None)
@click.option("--eps-points", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
def regime_cmd(gamma, x0, n, eps_min, eps_points, threads, config_path, output_dir, cache_dir):
    """Cut-off regime verdict as a JSON document."""
    config = load_config(config_path)
    gamma = _resolve(gamma, config, "gamma", float, None)
    if gamma is None:
        raise click.UsageError("--gamma is required")
    x0 = _resolve(x0, config, "x0", float, 2.0)
    n = _resolve(n, config, "n", int, 3)
    eps_min = _resolve(eps_min, config, "eps_min", float, 1e-4)
    eps_points = _resolve(eps_points, config, "eps_points", int, 17)
    threads = _resolve(threads, config, "threads", int, 1)
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))
    analyzer = _analyzer(gamma, x0, n, eps_min, eps_points, _cache_dir(cache_dir, config))
    report = analyzer.analyze(threads=max(1, threads))
    resolved = {
        "command": "regime", "gamma": gamma, "x0": x0, "n": n,
        "eps_min": eps_min, "eps_points": eps_points,
    }
    doc = {
        "provenance": {
            "tool": "cutofflab",
            "version": __version__,
            "solver_version": SOLVER_VERSION,
            "config_hash": _config_hash(resolved),
        },
        "gamma": gamma,
        "x0": x0,
        "n": n,
        "verdict": report.verdict,
        "mode_used": report.mode_used,
        "centered_mode": report.centered_mode,
        "thresholds": {
            "divergence": report.thresholds.divergence,
            "collapse": report.thresholds.collapse,
            "profile_gap": report.thresholds.profile_gap,
            "trend_window": report.thresholds.trend_window,
            "bound_slack": report.thresholds.bound_slack,
        },
        "sup_norm_bound": report.sup_norm_bound,
        "epsilon_grid": list(analyzer.problem.epsilon_grid),
        "cutoff_times": [
            None if math.isnan(rec.t_eps) else rec.t_eps for rec in report.records
        ],
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "regime.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"verdict: {report.verdict}")
    click.echo(f"wrote {path}")


@cli.command("mc-validate")
@click.option("--gamma", type=float, default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--x0", type=float, default=None)
@click.option("--n", type=int, default=None)
@click.option("--n-paths", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--step", type=float, default=None)
@click.option("--times", type=str, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--cache-dir", type=click.Path(), default=None)
def mc_validate_cmd(
    gamma, epsilon, x0, n, n_paths, seed, step, times, config_path, output_dir, cache_dir
):
    """Monte Carlo versus spectral distance at chosen observation times."""
    config = load_config(config_path)
    gamma = _resolve(gamma, config, "gamma", float, None)
    if gamma is None:
        raise click.UsageError("--gamma is required")
    epsilon = _resolve(epsilon, config, "epsilon", float, 0.5)
    if epsilon < 0.1:
        raise click.UsageError("mc-validate is restricted to epsilon >= 0.1")
    x0 = _resolve(x0, config, "x0", float, 2.0)
    n = _resolve(n, config, "n", int, 2)
    n_paths = _resolve(n_paths, config, "n_paths", int, 100_000)
    seed = _resolve(seed, config, "seed", int, 20240817)
    step = _resolve(step, config, "step", float, 1e-3)
    times_str = _resolve(times, config, "times", str, "0.5,1.0,2.0")
    t_list = [float(v) for v in times_str.split(",")]
    out_dir = Path(_resolve(output_dir, config, "output_dir", str, "."))

    analyzer = _analyzer(gamma, x0, n, 1e-2, 9, _cache_dir(cache_dir, config))
    cfg = SimConfig(
        gamma=gamma,
        epsilon=epsilon,
        x0=x0,
        delta=analyzer.problem.delta(epsilon),
        step=step,
        horizon=max(t_list),
        n_paths=n_paths,
        seed=seed,
    )
    sample = simulate_paths(cfg, t_list)
    resolved = {
        "command": "mc-validate", "gamma": gamma, "epsilon": epsilon, "x0": x0,
        "n": n, "n_paths": n_paths, "seed": seed, "step": step, "times": t_list,
    }
    rows = []
    for idx, t in enumerate(sample.times):
        stat = empirical_distance(sample.states[idx], analyzer.es, epsilon, n)
        spectral = analyzer.distance(epsilon, float(t)).to_float()
        z = (stat.value - spectral) / stat.std_error if stat.std_error > 0 else math.inf
        rows.append((float(t), stat.value, spectral, stat.std_error, z))
    _write_csv(
        out_dir / "mc_validate.csv",
        _provenance(resolved),
        ["t", "empirical", "spectral", "std_err", "z_score"],
        rows,
    )
    click.echo(f"wrote {out_dir / 'mc_validate.csv'}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except InvalidInput as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        return 1
    except CutoffLabError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
