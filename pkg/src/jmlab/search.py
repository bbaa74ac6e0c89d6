"""Derivative-free search over parametrized joint POVMs.

A parameter vector is mapped onto a valid POVM by stacking one complex block
per outcome and orthonormalizing the stack into an isometry ``V``; the POVM
elements are ``V_k^dag V_k``.  Zero parameters decode to the uniform POVM
``I / n`` (or ``E^A(x) / n_y`` on the precise-A manifold).

On the precise-A manifold only the conditional B-distribution inside each
eigenspace of ``A`` is free: ``Pi(x, y) = W_x R_x(y) W_x^dag`` with
``sum_y R_x(y) = I``, so the A-marginal equals the spectral measure of ``A``
for every parameter vector.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from . import linalg as la
from .errors import RelationViolation, ValidationError
from .povm import JointPovm, OutcomeGrid
from .relations import _Quantities
from .scenario import Scenario
from .tolerances import Tolerances, resolve

Objective = Literal["noise_product", "eps_B_given_precise_A", "output_spread_product"]
Optimizer = Literal["nelder_mead", "random_restart_descent"]
OBJECTIVES = ("noise_product", "eps_B_given_precise_A", "output_spread_product")
OPTIMIZERS = ("nelder_mead", "random_restart_descent")


# ---------------------------------------------------------------------------
# parametrization
# ---------------------------------------------------------------------------

def _with_slack(spectrum: np.ndarray, extra: float, min_gap: float = 1e-6) -> np.ndarray:
    if np.min(np.abs(spectrum - extra)) <= min_gap:
        return spectrum
    return np.sort(np.append(spectrum, extra))


def default_grid(A, B, psi, precise_A: bool = False) -> OutcomeGrid:
    """Spectra of ``A`` and ``B``, each extended by the mean value in ``psi``.

    The extra outcome lets the search express a guess; it is dropped when it
    coincides with an eigenvalue, and on the precise-A manifold the x-axis is
    the bare spectrum of ``A``.
    """
    sa = la.spectral(A).eigenvalues
    sb = la.spectral(B).eigenvalues
    x = sa if precise_A else _with_slack(sa, la.real_expectation(A, psi))
    y = _with_slack(sb, la.real_expectation(B, psi))
    return OutcomeGrid(x, y)


def _eigenspaces(A: np.ndarray, grid: OutcomeGrid) -> list[np.ndarray]:
    vals, vecs = np.linalg.eigh(A)
    spaces = []
    for x in grid.x_values:
        cols = np.flatnonzero(np.abs(vals - x) <= 1e-8 * max(1.0, np.ptp(vals)))
        if cols.size == 0:
            raise ValidationError(f"grid value {x} is not an eigenvalue of A")
        spaces.append(vecs[:, cols])
    return spaces


@dataclass(frozen=True)
class PovmParametrization:
    """Maps real vectors onto joint POVMs with a fixed grid.

    ``precise_A`` (an observable) restricts decoding to POVMs whose
    A-marginal is the spectral measure of that observable.
    """

    dim: int
    grid: OutcomeGrid
    precise_A: np.ndarray | None = field(default=None, repr=False)

    @property
    def _block_dims(self) -> list[int]:
        if self.precise_A is None:
            return [self.dim]
        return [W.shape[1] for W in _eigenspaces(self.precise_A, self.grid)]

    @property
    def n_params(self) -> int:
        nx, ny = self.grid.shape
        if self.precise_A is None:
            return 2 * nx * ny * self.dim**2
        return sum(2 * ny * r * r for r in self._block_dims)

    def decode(self, params) -> JointPovm:
        return decode(self, params)


def _isometry_blocks(theta: np.ndarray, n: int, r: int) -> np.ndarray:
    """Blocks ``V_k`` (n, r, r) of the isometry obtained from base + theta."""
    G = np.tile(np.eye(r, dtype=complex) / np.sqrt(n), (n, 1, 1))
    G = G + (theta[: n * r * r] + 1j * theta[n * r * r:]).reshape(n, r, r)
    stacked = G.reshape(n * r, r)
    gram = stacked.conj().T @ stacked
    jitter_rng = np.random.default_rng(0)
    for _ in range(5):
        vals, vecs = np.linalg.eigh(gram)
        if vals.min() > 1e-12 * max(1.0, vals.max()):
            break
        stacked = stacked + 1e-6 * (jitter_rng.standard_normal(stacked.shape)
                                    + 1j * jitter_rng.standard_normal(stacked.shape))
        gram = stacked.conj().T @ stacked
    else:
        raise ValidationError("orthonormalization failed: parameter block is rank deficient")
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return (stacked @ inv_sqrt).reshape(n, r, r)


def decode(param: PovmParametrization, params) -> JointPovm:
    """Deterministically turn a parameter vector into a valid joint POVM."""
    theta = np.asarray(params, dtype=float).ravel()
    if theta.size != param.n_params:
        raise ValueError(f"expected {param.n_params} parameters, got {theta.size}")
    nx, ny = param.grid.shape
    d = param.dim
    if param.precise_A is None:
        V = _isometry_blocks(theta, nx * ny, d)
        el = np.einsum("kai,kaj->kij", V.conj(), V).reshape(nx, ny, d, d)
    else:
        el = np.zeros((nx, ny, d, d), dtype=complex)
        offset = 0
        for i, W in enumerate(_eigenspaces(param.precise_A, param.grid)):
            r = W.shape[1]
            size = 2 * ny * r * r
            V = _isometry_blocks(theta[offset: offset + size], ny, r)
            offset += size
            R = np.einsum("kai,kaj->kij", V.conj(), V)
            el[i] = np.einsum("ai,kij,bj->kab", W, R, W.conj())
    el = (el + np.swapaxes(el, -1, -2).conj()) / 2
    return JointPovm(param.grid, el)


def encode(param: PovmParametrization, p: JointPovm) -> np.ndarray:
    """Parameters that decode exactly to ``p`` (grid and dimension must match).

    Uses ``V_k = Pi_k^(1/2)``: the stack is already an isometry, so decoding
    leaves it unchanged.  On the precise-A manifold ``p`` must be supported on
    the eigenspaces of ``A``.
    """
    if p.grid.shape != param.grid.shape or p.dim != param.dim:
        raise ValueError("POVM grid or dimension does not match the parametrization")
    nx, ny = param.grid.shape
    if param.precise_A is None:
        blocks = [np.stack([la.psd_sqrt(p.elements[i, j]) for i in range(nx) for j in range(ny)])]
    else:
        blocks = []
        for i, W in enumerate(_eigenspaces(param.precise_A, param.grid)):
            blocks.append(np.stack([la.psd_sqrt(W.conj().T @ p.elements[i, j] @ W) for j in range(ny)]))
    parts = []
    for V in blocks:
        n, r, _ = V.shape
        theta = (V - np.eye(r) / np.sqrt(n)).ravel()
        parts.extend([theta.real, theta.imag])
    return np.concatenate(parts)


def _nearest(values: np.ndarray, v: float) -> int:
    return int(np.argmin(np.abs(values - v)))


def structured_seeds(scenario: Scenario, grid: OutcomeGrid) -> list[JointPovm]:
    """Closed-form candidates on ``grid``: one axis measured sharply, the other guessed.

    When ``A`` and ``B`` commute the joint spectral measure is added.  Seeds
    whose sharp axis is not resolved by the grid are skipped.
    """
    A, B, psi = scenario.A, scenario.B, scenario.psi
    d = scenario.dim
    nx, ny = grid.shape
    seeds = []

    def projectors(X, values):
        sd = la.spectral(X)
        atol = 1e-8 * max(1.0, float(np.ptp(sd.eigenvalues)))
        found = [sd.projector_for(v, atol) for v in values]
        covered = sum(P for P in found if P is not None)
        ok = np.allclose(covered, np.eye(d), atol=1e-9)
        return [np.zeros((d, d), complex) if P is None else P for P in found], ok

    EA, ok_a = projectors(A, grid.x_values)
    EB, ok_b = projectors(B, grid.y_values)
    if ok_a:
        el = np.zeros((nx, ny, d, d), complex)
        el[:, _nearest(grid.y_values, la.real_expectation(B, psi))] = EA
        seeds.append(JointPovm(grid, el))
    if ok_b:
        el = np.zeros((nx, ny, d, d), complex)
        el[_nearest(grid.x_values, la.real_expectation(A, psi))] = EB
        seeds.append(JointPovm(grid, el))
    if ok_a and ok_b and la.opnorm(la.commutator(A, B)) <= 1e-9 * max(1.0, la.opnorm(A) * la.opnorm(B)):
        el = np.einsum("iab,jbc->ijac", np.array(EA), np.array(EB))
        seeds.append(JointPovm(grid, (el + np.swapaxes(el, -1, -2).conj()) / 2))
    return seeds


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    objective: Objective = "eps_B_given_precise_A"
    optimizer: Optimizer = "nelder_mead"
    max_evals: int = 5000
    seed: int = 0
    restarts: int = 4
    init_scale: float = 0.5
    xatol: float = 1e-8
    fatol: float = 1e-12
    warm_start: bool = True
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        keys = ("objective", "optimizer", "max_evals", "seed", "restarts", "init_scale", "xatol", "fatol",
                "warm_start")
        kwargs = {k: data[k] for k in keys if k in data}
        if "slack_tol" in data:
            kwargs["tol"] = Tolerances(slack=float(data["slack_tol"]))
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {"objective": self.objective, "optimizer": self.optimizer, "max_evals": self.max_evals,
                "seed": self.seed, "restarts": self.restarts, "init_scale": self.init_scale,
                "xatol": self.xatol, "fatol": self.fatol, "warm_start": self.warm_start}


@dataclass(frozen=True)
class TraceRow:
    index: int
    objective: float
    uvur_slack: float
    gur_slack: float
    eps_A: float


TRACE_FIELDS = ("eval", "objective", "uvur_slack", "gur_slack")


@dataclass(frozen=True)
class SearchResult:
    objective: str
    best_value: float
    best_povm: JointPovm
    best_params: np.ndarray
    bound: float
    bound_guaranteed: bool
    trace: tuple[TraceRow, ...]

    @property
    def n_evals(self) -> int:
        return len(self.trace)

    @property
    def min_uvur_slack(self) -> float:
        return min(r.uvur_slack for r in self.trace)

    @property
    def min_gur_slack(self) -> float:
        return min(r.gur_slack for r in self.trace)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for r in self.trace:
            w.writerow([r.index, repr(r.objective), repr(r.uvur_slack), repr(r.gur_slack)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "best_value": self.best_value,
            "bound": self.bound,
            "bound_guaranteed": self.bound_guaranteed,
            "n_evals": self.n_evals,
            "min_uvur_slack": self.min_uvur_slack,
            "min_gur_slack": self.min_gur_slack,
            "best_povm": self.best_povm.to_dict(),
        }


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Objective wrapper: decodes, checks the universal floor, records the trace."""

    def __init__(self, scenario: Scenario, param: PovmParametrization, cfg: SearchConfig):
        self.scenario = scenario
        self.param = param
        self.cfg = cfg
        self.tol = cfg.tol
        self.trace: list[TraceRow] = []
        self.best = (np.inf, None)

    def __call__(self, theta: np.ndarray) -> float:
        if len(self.trace) >= self.cfg.max_evals:
            raise _BudgetExhausted
        p = self.param.decode(theta)
        sc = self.scenario
        q = _Quantities(p, sc.A, sc.B, sc.psi, None, self.tol)
        uvur = q.uvur_lhs - q.half_ab
        gur = q.gur_lhs - q.half_ab
        if uvur < -self.tol.slack or gur < -self.tol.slack:
            raise RelationViolation(
                f"candidate {len(self.trace)} violates a universal relation "
                f"(uvur slack {uvur:.3e}, gur slack {gur:.3e}); params={theta.tolist()}"
            )
        if self.cfg.objective == "noise_product":
            value = q.eps_a * q.eps_b
        elif self.cfg.objective == "eps_B_given_precise_A":
            if q.eps_a > self.tol.precision:
                raise ValidationError(f"precision constraint broken: eps(A) = {q.eps_a:.3e}")
            value = q.std_a * q.eps_b
        else:
            value = q.report_a.output_std * q.report_b.output_std
        if not np.isfinite(value):
            raise ValidationError("objective is not finite")
        self.trace.append(TraceRow(len(self.trace), float(value), float(uvur), float(gur), float(q.eps_a)))
        if value < self.best[0]:
            self.best = (float(value), np.array(theta, dtype=float))
        return float(value)


def _nelder_mead(f: Callable, x0: np.ndarray, budget: int, cfg: SearchConfig, rng) -> None:
    scipy_minimize(f, x0, method="Nelder-Mead",
                   options={"maxfev": budget, "xatol": cfg.xatol, "fatol": cfg.fatol, "adaptive": True})


def _random_descent(f: Callable, x0: np.ndarray, budget: int, cfg: SearchConfig, rng) -> None:
    """(1+1) evolution strategy with the one-fifth success rule."""
    x, fx = x0, f(x0)
    step = cfg.init_scale
    for _ in range(budget - 1):
        cand = x + step * rng.standard_normal(x.size)
        fc = f(cand)
        if fc < fx:
            x, fx = cand, fc
            step *= 1.5
        else:
            step *= 1.5 ** (-0.25)
        if step < cfg.xatol:
            break


def minimize(scenario: Scenario, cfg: SearchConfig | None = None,
             grid: OutcomeGrid | None = None) -> SearchResult:
    """Minimize the configured objective over joint POVMs for ``scenario``.

    Every candidate is checked against the universally valid relation and
    the generalized relation; a negative slack beyond tolerance raises
    :class:`RelationViolation`.  With ``warm_start`` the noise-product search
    also evaluates :func:`structured_seeds` before the first restart.
    """
    cfg = cfg or SearchConfig()
    precise = cfg.objective == "eps_B_given_precise_A"
    grid = grid or default_grid(scenario.A, scenario.B, scenario.psi, precise_A=precise)
    param = PovmParametrization(scenario.dim, grid, scenario.A if precise else None)
    ev = _Evaluator(scenario, param, cfg)
    run = _nelder_mead if cfg.optimizer == "nelder_mead" else _random_descent
    # One independent stream per restart, derived from the configured seed.
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)]
    start = np.zeros(param.n_params)
    if cfg.warm_start and cfg.objective == "noise_product":
        # Evaluate the closed-form seeds once; the first restart begins at the best one.
        best_start = ev(start)
        for seed_povm in structured_seeds(scenario, grid):
            theta = encode(param, seed_povm)
            value = ev(theta)
            if value < best_start:
                start, best_start = theta, value
    for k in range(cfg.restarts):
        remaining = cfg.max_evals - len(ev.trace)
        if remaining <= 0:
            break
        budget = remaining // (cfg.restarts - k)
        rng = rngs[k]
        x0 = start if k == 0 else cfg.init_scale * rng.standard_normal(param.n_params)
        try:
            run(ev, x0, max(budget, 1), cfg, rng)
        except _BudgetExhausted:
            break
    half_ab = 0.5 * abs(la.expectation(la.commutator(scenario.A, scenario.B), scenario.psi))
    bound = 2 * half_ab if cfg.objective == "output_spread_product" else half_ab
    best_value, best_params = ev.best
    return SearchResult(
        objective=cfg.objective,
        best_value=best_value,
        best_povm=param.decode(best_params),
        best_params=best_params,
        bound=bound,
        bound_guaranteed=precise,
        trace=tuple(ev.trace),
    )


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_FIELDS = ("scenario", "objective", "best_value", "bound", "bound_guaranteed", "slack",
                "n_evals", "min_uvur_slack", "min_gur_slack")


def _sweep_one(args) -> dict:
    idx, scenario, cfg = args
    res = minimize(scenario, cfg)
    return {
        "scenario": scenario.name or idx,
        "objective": res.objective,
        "best_value": res.best_value,
        "bound": res.bound,
        "bound_guaranteed": res.bound_guaranteed,
        "slack": res.best_value - res.bound,
        "n_evals": res.n_evals,
        "min_uvur_slack": res.min_uvur_slack,
        "min_gur_slack": res.min_gur_slack,
    }


def map_jobs(fn, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map, optionally across worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def sweep(scenarios: Iterable[Scenario], cfg: SearchConfig | None = None, jobs: int = 1) -> list[dict]:
    """Run :func:`minimize` on each scenario; one summary row per scenario."""
    cfg = cfg or SearchConfig()
    items = [(i, sc, cfg) for i, sc in enumerate(scenarios)]
    return map_jobs(_sweep_one, items, jobs)


def rows_to_csv(rows: list[dict], fields: Sequence[str] = SWEEP_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
