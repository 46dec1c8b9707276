"""Grid discretization and eigensolver for the generator at unit noise.

The divergence form ``-e^{V}(e^{-V}u')'`` is discretized with exponentially
fitted flux weights and symmetrized by the sqrt-Boltzmann gauge, giving a
symmetric tridiagonal matrix whose entries only involve differences of V
between neighbouring nodes (so nothing overflows and V'' is never touched,
which matters for gamma < 1 where it is singular at the origin).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, InvalidInput, SolverFailure
from .potential import Potential, log_partition, turning_point

__all__ = [
    "SOLVER_VERSION",
    "Grid",
    "EigenSystem",
    "build_operator",
    "apply_generator",
    "default_grid",
    "solve_eigensystem",
    "eval_eigenfunction",
    "zero_count",
    "save_eigensystem",
    "load_eigensystem",
]

SOLVER_VERSION = "1"

# Reject grids whose Boltzmann weight at the boundary exceeds this; the
# Dirichlet truncation error is then no longer negligible.
BOUNDARY_WEIGHT_CUTOFF = 1e-30

# Target V(L) for the default domain: deep enough for the cutoff above,
# shallow enough that eigenvector tails stay above the eigensolver noise
# floor through 0.9*L.
_V_TARGET = 70.0

# Default absolute spacing; the relative rule 2e-3*L takes over on small domains.
_H_TARGET = 6e-3

# Relative eigenvector threshold below which tail samples are noise-dominated.
_TAIL_RELIABLE = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform symmetric grid on [-half_width, half_width] with an odd point count.

    Odd ``n_points`` puts a node at x=0, making parity labels and centered
    evaluations exact.
    """

    half_width: float
    n_points: int

    def __post_init__(self) -> None:
        if not (self.half_width > 0.0 and math.isfinite(self.half_width)):
            raise InvalidInput(f"half_width must be positive, got {self.half_width}")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise InvalidInput(f"n_points must be odd and >= 3, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        # mirrored construction keeps the grid exactly symmetric about 0
        half = np.linspace(0.0, self.half_width, (self.n_points + 1) // 2)
        return np.concatenate([-half[:0:-1], half])


@dataclass(frozen=True)
class EigenSystem:
    """Orthonormal eigenpairs of the negative generator at unit noise.

    Rows of ``eigenfunctions`` are samples of the eigenfunctions on the grid
    nodes, normalized in L2 of the equilibrium density, positive at the
    largest reliable node.  ``reliable_bounds[k]`` is the largest |x| at
    which row k is above the eigensolver noise floor; beyond it the
    back-transformed values are garbage and must not be used.
    Immutable after construction; safe to share across threads.
    """

    gamma: float
    grid: Grid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    parities: tuple[str, ...]
    quad_weight: np.ndarray
    reliable_bounds: np.ndarray
    turning_points: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues) - 1

    def sup_norm(self, k: int) -> float:
        """Sup of |psi_k| over the reliable band."""
        x = self.grid.nodes
        mask = np.abs(x) <= self.reliable_bounds[k]
        return float(np.max(np.abs(self.eigenfunctions[k][mask])))

    def osc_sup(self, k: int) -> float:
        """Sup of |psi_k| over the oscillatory band |x| <= turning point.

        The L2-normalized eigenfunction is O(1) there, which makes this the
        right scale for is-the-center-value-really-zero decisions; the full
        grid sup grows like the tail for gamma < 1 and would swamp them.
        """
        x = self.grid.nodes
        mask = np.abs(x) <= max(float(self.turning_points[k]), 1.0)
        return float(np.max(np.abs(self.eigenfunctions[k][mask])))

    def center_value(self, k: int) -> float:
        """psi_k(0); exact node value thanks to the odd grid."""
        return float(self.eigenfunctions[k][self.grid.n_points // 2])


def build_operator(
    p: Potential, grid: Grid, epsilon: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric tridiagonal matrix (diag, offdiag) on the interior nodes.

    Flux weights are the Boltzmann factor at cell midpoints; the similarity
    transform by sqrt(e^{-V/eps}) is folded in analytically so every entry
    is an exponential of a *difference* of potential values.  Dirichlet
    conditions at the two boundary nodes.
    """
    if not epsilon > 0.0:
        raise InvalidInput(f"epsilon must be positive, got {epsilon}")
    v_boundary = float(p.value(grid.half_width)) / epsilon
    if v_boundary < -math.log(BOUNDARY_WEIGHT_CUTOFF):
        raise DomainError(
            f"domain too small: exp(-V(L)/eps)={math.exp(-v_boundary):.3e} exceeds "
            f"{BOUNDARY_WEIGHT_CUTOFF:g} of the maximum weight"
        )
    x = grid.nodes
    h = grid.spacing
    v = p.value(x) / epsilon
    v_mid = p.value(0.5 * (x[:-1] + x[1:])) / epsilon
    diag = epsilon * (np.exp(v[1:-1] - v_mid[1:]) + np.exp(v[1:-1] - v_mid[:-1])) / h**2
    off = -epsilon * np.exp(0.5 * (v[1:-2] + v[2:-1]) - v_mid[1:-1]) / h**2
    return diag, off


def apply_generator(p: Potential, grid: Grid, u: np.ndarray, epsilon: float = 1.0) -> np.ndarray:
    """Action of the negative generator on interior node values of ``u``.

    Same flux discretization as `build_operator` but in the original
    (non-symmetrized) gauge; used to check that constants are annihilated.
    """
    x = grid.nodes
    h = grid.spacing
    v = p.value(x) / epsilon
    v_mid = p.value(0.5 * (x[:-1] + x[1:])) / epsilon
    flux_right = np.exp(v[1:-1] - v_mid[1:]) * (u[2:] - u[1:-1])
    flux_left = np.exp(v[1:-1] - v_mid[:-1]) * (u[1:-1] - u[:-2])
    return -epsilon * (flux_right - flux_left) / h**2


def _domain_half_width(p: Potential, lam: float) -> float:
    rejection = ((p.gamma + 1.0) * _V_TARGET) ** (1.0 / (p.gamma + 1.0))
    return max(rejection, 1.05 * turning_point(p, lam) + 2.0)


def _default_n_points(half_width: float) -> int:
    h = min(_H_TARGET, 2e-3 * half_width)
    n = int(math.ceil(2.0 * half_width / h)) + 1
    if n % 2 == 0:
        n += 1
    return n


def _eigenvalues_only(p: Potential, grid: Grid, n_modes: int, epsilon: float = 1.0) -> np.ndarray:
    diag, off = build_operator(p, grid, epsilon)
    return eigh_tridiagonal(
        diag, off, select="i", select_range=(0, n_modes), eigvals_only=True
    )


def default_grid(p: Potential, n_modes: int) -> Grid:
    """Domain sized from the actual n-th eigenvalue, found by bootstrap.

    The half-width combines the boundary-weight rejection rule with the
    turning point of the largest requested mode plus tail margin.
    """
    if n_modes < 1:
        raise InvalidInput(f"n_modes must be >= 1, got {n_modes}")
    lam_guess = float(max(1.0, n_modes))
    lam_top = lam_guess
    for _ in range(4):
        half_width = _domain_half_width(p, lam_guess)
        coarse = Grid(half_width, 2001)
        vals = _eigenvalues_only(p, coarse, n_modes)
        lam_top = float(vals[n_modes])
        if lam_top <= lam_guess:
            break
        lam_guess = 1.05 * lam_top
    half_width = _domain_half_width(p, 1.2 * lam_top)
    return Grid(half_width, _default_n_points(half_width))


def _reliable_bound(grid: Grid, v_col: np.ndarray) -> float:
    """Largest |x| where the Schrodinger-gauge eigenvector is above noise."""
    good = np.abs(v_col) >= _TAIL_RELIABLE * np.max(np.abs(v_col))
    idx = np.where(good)[0]
    interior = grid.nodes[1:-1]
    return float(min(abs(interior[idx[0]]), abs(interior[idx[-1]])))


def solve_eigensystem(
    p: Potential,
    n_modes: int,
    grid: Grid | None = None,
    refine: bool = True,
    epsilon: float = 1.0,
) -> EigenSystem:
    """First ``n_modes + 1`` eigenpairs, orthonormal in L2 of the equilibrium.

    Eigenvectors come from the requested grid; with ``refine`` the reported
    eigenvalues are Richardson-extrapolated against an independent solve on
    a roughly twice-coarser grid (the scheme is cleanly second order, so the
    extrapolation is ~h^4).
    """
    if n_modes < 1:
        raise InvalidInput(f"n_modes must be >= 1, got {n_modes}")
    if grid is None:
        grid = default_grid(p, n_modes)
    diag, off = build_operator(p, grid, epsilon)
    try:
        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_modes))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SolverFailure(f"tridiagonal eigensolver failed: {exc}") from exc

    if refine:
        n_coarse = (grid.n_points + 1) // 2
        if n_coarse % 2 == 0:
            n_coarse += 1
        coarse = Grid(grid.half_width, n_coarse)
        vals_c = _eigenvalues_only(p, coarse, n_modes, epsilon)
        h2 = grid.spacing**2
        hc2 = coarse.spacing**2
        vals = (hc2 * vals - h2 * vals_c) / (hc2 - h2)

    scale = epsilon ** ((p.gamma - 1.0) / (p.gamma + 1.0)) if epsilon != 1.0 else 1.0
    if abs(vals[0]) > 1e-8 * max(1.0, scale):
        raise SolverFailure(f"ground eigenvalue {vals[0]:.3e} is not numerically zero")
    if np.min(np.diff(vals)) <= 0.0:
        raise SolverFailure("computed spectrum is not strictly increasing")

    x = grid.nodes
    n = grid.n_points
    v_half = p.value(x) / (2.0 * epsilon)
    parts = log_partition(p, epsilon)
    weight = np.exp(parts.log_c_eps - p.value(x) / epsilon)
    trap = np.full(n, grid.spacing)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    quad_weight = trap * weight

    rows = np.zeros((n_modes + 1, n))
    parities: list[str] = []
    bounds = np.zeros(n_modes + 1)
    x_stars = np.zeros(n_modes + 1)
    center = n // 2
    for k in range(n_modes + 1):
        col = vecs[:, k]
        u = np.zeros(n)
        u[1:-1] = np.exp(v_half[1:-1]) * col
        u /= math.sqrt(float(np.sum(quad_weight * u * u)))
        good = np.where(np.abs(col) >= 1e-9 * np.max(np.abs(col)))[0]
        if u[good[-1] + 1] < 0.0:
            u = -u
        rows[k] = u
        bounds[k] = _reliable_bound(grid, col)
        x_stars[k] = turning_point(p, float(vals[k])) if vals[k] > 1e-8 else 1.0
        band = np.abs(x) <= max(x_stars[k], 1.0)
        threshold = 1e-8 * np.max(np.abs(u[band]))
        parities.append("even" if abs(u[center]) > threshold else "odd")

    return EigenSystem(
        gamma=p.gamma,
        grid=grid,
        eigenvalues=np.asarray(vals, dtype=float),
        eigenfunctions=rows,
        parities=tuple(parities),
        quad_weight=quad_weight,
        reliable_bounds=bounds,
        turning_points=x_stars,
    )


def eval_eigenfunction(es: EigenSystem, k: int, x):
    """Piecewise-linear interpolation of eigenfunction k at x (scalar or array)."""
    if not 0 <= k <= es.n_modes:
        raise InvalidInput(f"mode index {k} outside 0..{es.n_modes}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > es.grid.half_width * (1.0 + 1e-12)):
        raise DomainError(f"evaluation point outside [-{es.grid.half_width}, {es.grid.half_width}]")
    out = np.interp(x_arr, es.grid.nodes, es.eigenfunctions[k])
    return out if out.ndim else float(out)


def zero_count(es: EigenSystem, k: int) -> int:
    """Number of strict sign changes of row k strictly inside the domain.

    Counted on the Schrodinger-gauge profile (psi times the sqrt-Boltzmann
    weight), whose scale is O(1) across the oscillatory region; nodes below
    its noise floor are dropped so spurious flips in the dead tail are
    ignored, while the growing tail of psi itself cannot mask interior
    zeros.
    """
    if not 0 <= k <= es.n_modes:
        raise InvalidInput(f"mode index {k} outside 0..{es.n_modes}")
    p = Potential(es.gamma)
    x = es.grid.nodes[1:-1]
    profile = es.eigenfunctions[k][1:-1] * np.exp(-0.5 * p.value(x))
    keep = np.abs(profile) > 1e-9 * np.max(np.abs(profile))
    signs = np.sign(profile[keep])
    return int(np.sum(signs[1:] * signs[:-1] < 0))


def orthonormality_defect(es: EigenSystem) -> float:
    """max_{j,k} |<psi_j, psi_k> - delta_jk| under the stored quadrature."""
    gram = (es.eigenfunctions * es.quad_weight) @ es.eigenfunctions.T
    return float(np.max(np.abs(gram - np.eye(es.n_modes + 1))))


def _cache_key(gamma: float, half_width: float, n_points: int, n_modes: int) -> str:
    return f"{gamma:.12g}|{half_width:.12g}|{n_points}|{n_modes}"


def save_eigensystem(es: EigenSystem, path: str | Path) -> None:
    """Serialize to the JSON cache document schema."""
    doc = {
        "gamma": es.gamma,
        "half_width": es.grid.half_width,
        "n_points": es.grid.n_points,
        "n_modes": es.n_modes,
        "eigenvalues": es.eigenvalues.tolist(),
        "parities": list(es.parities),
        "eigenfunctions": es.eigenfunctions.tolist(),
        "solver_version": SOLVER_VERSION,
    }
    Path(path).write_text(json.dumps(doc))


def load_eigensystem(path: str | Path) -> EigenSystem:
    """Load a cache document; raises on schema or version mismatch."""
    doc = json.loads(Path(path).read_text())
    if doc.get("solver_version") != SOLVER_VERSION:
        raise InvalidInput(
            f"cache written by solver version {doc.get('solver_version')!r}, "
            f"current is {SOLVER_VERSION!r}"
        )
    grid = Grid(float(doc["half_width"]), int(doc["n_points"]))
    p = Potential(float(doc["gamma"]))
    rows = np.asarray(doc["eigenfunctions"], dtype=float)
    n_modes = int(doc["n_modes"])
    if rows.shape != (n_modes + 1, grid.n_points):
        raise InvalidInput("eigenfunction matrix shape does not match grid")
    parts = log_partition(p, 1.0)
    weight = np.exp(parts.log_c_eps - p.value(grid.nodes))
    trap = np.full(grid.n_points, grid.spacing)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    v_half = p.value(grid.nodes) / 2.0
    vals = np.asarray(doc["eigenvalues"], dtype=float)
    bounds = np.zeros(n_modes + 1)
    x_stars = np.zeros(n_modes + 1)
    for k in range(n_modes + 1):
        col = rows[k][1:-1] * np.exp(-v_half[1:-1])
        bounds[k] = _reliable_bound(grid, col)
        x_stars[k] = turning_point(p, float(vals[k])) if vals[k] > 1e-8 else 1.0
    return EigenSystem(
        gamma=p.gamma,
        grid=grid,
        eigenvalues=vals,
        eigenfunctions=rows,
        parities=tuple(doc["parities"]),
        quad_weight=trap * weight,
        reliable_bounds=bounds,
        turning_points=x_stars,
    )
