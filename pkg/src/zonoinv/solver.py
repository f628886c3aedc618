"""Log-barrier interior-point solver for concave maximization over ``C z <= b``.

The solver maximizes a concave objective ``f`` over a polyhedron by
minimizing ``phi_mu(z) = -f(z) - mu * sum(log(b - C z))`` for a decreasing
sequence of barrier weights ``mu``, taking damped Newton steps with a
backtracking (Armijo) line search that keeps every iterate strictly feasible.
A stage is converged when half the squared Newton decrement drops below a
tolerance, and the outer loop stops at the first stage with
``m * mu < gap_tol`` (the standard barrier duality-gap bound).

Newton systems are solved densely by Cholesky; for the lifted
triangular-parameterization systems the auxiliary-variable blocks (whose
barrier Hessian is block diagonal, one small block per time step and state
row) are eliminated first by a Schur complement, which reduces the dense
solve from thousands of variables to the d + d^2 "kept" ones.

Phase 1 first tries a caller-provided warm-start point; if some slack is
below the strict-feasibility margin it maximizes ``-s`` subject to
``C z - s 1 <= b`` and ``s >= -1`` (the extra bound keeps the auxiliary
problem bounded; only the sign of the optimum matters) and declares the
problem infeasible when the optimal ``s`` is not clearly negative.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DomainError, SchemaError
from .invariance import (
    InvarianceProblem,
    LinearInequalitySystem,
    VariableLayout,
    assemble,
    check_invariance_certificate,
    warm_start_point,
)
from .parameterizations import make_objective
from .zonotope import Zonotope

__all__ = [
    "OPTIMAL",
    "MAX_ITERATIONS",
    "INFEASIBLE",
    "NUMERICAL_FAILURE",
    "SolverOptions",
    "SolveResult",
    "EmbeddedObjective",
    "maximize",
    "phase1_feasible_point",
    "kkt_residual",
    "solve_invariance",
]

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverOptions:
    """Barrier-method knobs; every field has a working default.

    ``time_limit`` (seconds, wall clock) is None by default because any
    time-dependent branching breaks bitwise determinism of the iterate
    sequence; set it only when a budget matters more than reproducibility.
    """

    mu0: float = 1.0
    mu_factor: float = 0.2
    gap_tol: float = 1e-8
    max_newton: int = 50
    backtrack: float = 0.5
    armijo: float = 1e-4
    reg_floor: float = 1e-10
    newton_tol: float = 1e-9
    kkt_tol: float = 1e-4
    phase1_margin: float = 1e-6
    time_limit: float | None = None

    def __post_init__(self):
        if not (0.0 < self.mu_factor < 1.0):
            raise SchemaError(f"options.mu_factor must lie in (0, 1), got {self.mu_factor}")
        if not (0.0 < self.backtrack < 1.0):
            raise SchemaError(f"options.backtrack must lie in (0, 1), got {self.backtrack}")
        for name in ("mu0", "gap_tol", "armijo", "reg_floor", "newton_tol", "kkt_tol", "phase1_margin"):
            if getattr(self, name) <= 0.0:
                raise SchemaError(f"options.{name} must be positive")
        if self.max_newton < 1:
            raise SchemaError(f"options.max_newton must be >= 1, got {self.max_newton}")

    @classmethod
    def from_dict(cls, raw: dict) -> "SolverOptions":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(f"options: unknown field(s) {sorted(unknown)}")
        return cls(**raw)


@dataclass
class SolveResult:
    """Outcome of one maximization.

    ``volume`` is filled by :func:`solve_invariance` (recomputed from the
    decoded zonotope via the closed-form volume) and present iff the status
    is ``optimal``.  ``stage_objectives`` records the objective after each
    barrier stage; it is nondecreasing up to round-off.
    """

    status: str
    z: np.ndarray | None
    objective_value: float | None
    iterations: int
    wall_time: float
    volume: float | None = None
    kkt_residual: float | None = None
    stage_objectives: list = field(default_factory=list)
    zonotope: Zonotope | None = None
    certificate_ok: bool | None = None
    phase1_iterations: int = 0
    message: str = ""


class EmbeddedObjective:
    """Concave objective acting on a subset of the stacked variables.

    ``value_fn(x)`` returns the objective at the selected coordinates;
    ``vgh_fn(x)`` returns (value, gradient, dense Hessian) over them.  All
    remaining coordinates have zero gradient/Hessian.
    """

    def __init__(self, n: int, free_idx: np.ndarray, value_fn, vgh_fn):
        self.n = int(n)
        self.free_idx = np.asarray(free_idx, dtype=np.intp)
        self._value_fn = value_fn
        self._vgh_fn = vgh_fn

    def value(self, z) -> float:
        return float(self._value_fn(z[self.free_idx]))

    def value_grad_hess(self, z):
        value, grad, hess = self._vgh_fn(z[self.free_idx])
        return float(value), np.asarray(grad, dtype=float), np.asarray(hess, dtype=float)

    def grad_full(self, grad_free) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.free_idx] = grad_free
        return out

    @classmethod
    def from_layout(cls, layout: VariableLayout, objective) -> "EmbeddedObjective":
        idx = np.arange(layout.free.start, layout.free.stop, dtype=np.intp)
        return cls(layout.n, idx, objective.value, objective.value_grad_hess)


class _KKTSolver:
    """Newton-system solver ``H delta = r`` with optional block elimination.

    ``H = -hess_f + C^T diag(D) C`` is positive definite on strictly feasible
    points (the constraint matrix has full column rank by construction).  When
    ``blocks`` is nonempty, those variable groups are pairwise uncoupled in
    ``H`` and are eliminated by a Schur complement onto the kept variables.
    """

    def __init__(self, c_matrix, n: int, blocks: tuple, free_idx: np.ndarray):
        self.C = c_matrix
        self.dense = isinstance(c_matrix, np.ndarray)
        self.n = n
        self.blocks = blocks
        if blocks:
            sizes = {len(b) for b in blocks}
            if len(sizes) != 1:
                raise ValueError("elimination blocks must share one size")
            self.blk = int(sizes.pop())
            self.n_blocks = len(blocks)
            is_elim = np.zeros(n, dtype=bool)
            block_id = np.full(n, -1, dtype=np.intp)
            pos_in_block = np.zeros(n, dtype=np.intp)
            for bi, idx in enumerate(blocks):
                is_elim[idx] = True
                block_id[idx] = bi
                pos_in_block[idx] = np.arange(len(idx))
            self.is_elim = is_elim
            self.block_id = block_id
            self.pos_in_block = pos_in_block
            self.kept_idx = np.flatnonzero(~is_elim)
            self.elim_idx = np.concatenate(blocks)
            kept_pos = np.full(n, -1, dtype=np.intp)
            kept_pos[self.kept_idx] = np.arange(self.kept_idx.size)
            self.kept_pos = kept_pos
            if np.any(kept_pos[free_idx] < 0):
                raise ValueError("objective variables must not be eliminated")
            self.free_kept = kept_pos[free_idx]
        else:
            self.kept_idx = np.arange(n, dtype=np.intp)
            self.free_kept = np.asarray(free_idx, dtype=np.intp)

    def step(self, d_row: np.ndarray, neg_hess_free: np.ndarray, rhs: np.ndarray, reg_floor: float):
        """Solve ``H delta = rhs``; returns (delta, rhs . delta).

        Retries once with a diagonal shift if a Cholesky factorization fails,
        then raises :class:`numpy.linalg.LinAlgError`.
        """
        if self.dense:
            h = (self.C * d_row[:, np.newaxis]).T @ self.C
            h[np.ix_(self.free_kept, self.free_kept)] += neg_hess_free
            peak = float(np.abs(h).max(initial=1.0))
            shift = 0.0
            for attempt in range(2):
                try:
                    if shift:
                        h[np.diag_indices_from(h)] += shift
                    factor = scipy.linalg.cho_factor(h, lower=True, check_finite=False)
                    delta = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
                    return delta, float(rhs @ delta)
                except np.linalg.LinAlgError:
                    if attempt == 1:
                        raise
                    shift = reg_floor * (1.0 + peak)

        sqrt_d = np.sqrt(d_row)
        weighted = self.C.multiply(sqrt_d[:, np.newaxis]).tocsr()
        h_sparse = (weighted.T @ weighted).tocoo()
        shift = 0.0
        for attempt in range(2):
            try:
                delta = self._solve_structured(h_sparse, neg_hess_free, rhs, shift)
                return delta, float(rhs @ delta)
            except np.linalg.LinAlgError:
                if attempt == 1:
                    raise
                peak = float(h_sparse.data.max(initial=1.0))
                shift = reg_floor * (1.0 + peak)

    def _solve_structured(self, h_sparse, neg_hess_free, rhs, shift):
        if not self.blocks:
            h = h_sparse.toarray()
            h[np.ix_(self.free_kept, self.free_kept)] += neg_hess_free
            if shift:
                h[np.diag_indices_from(h)] += shift
            factor = scipy.linalg.cho_factor(h, lower=True, check_finite=False)
            return scipy.linalg.cho_solve(factor, rhs, check_finite=False)

        n_keep, n_blocks, blk = self.kept_idx.size, self.n_blocks, self.blk
        rows, cols, vals = h_sparse.row, h_sparse.col, h_sparse.data
        r_elim = self.is_elim[rows]
        c_elim = self.is_elim[cols]

        h_kept = np.zeros((n_keep, n_keep))
        mask = ~r_elim & ~c_elim
        h_kept[self.kept_pos[rows[mask]], self.kept_pos[cols[mask]]] = vals[mask]
        h_kept[np.ix_(self.free_kept, self.free_kept)] += neg_hess_free

        h_blocks = np.zeros((n_blocks, blk, blk))
        mask = r_elim & c_elim
        if np.any(self.block_id[rows[mask]] != self.block_id[cols[mask]]):
            raise AssertionError("elimination blocks are coupled; layout plan is wrong")
        h_blocks[self.block_id[rows[mask]], self.pos_in_block[rows[mask]], self.pos_in_block[cols[mask]]] = vals[mask]

        coupling = np.zeros((n_keep, n_blocks, blk))
        mask = ~r_elim & c_elim
        coupling[self.kept_pos[rows[mask]], self.block_id[cols[mask]], self.pos_in_block[cols[mask]]] = vals[mask]

        if shift:
            h_kept[np.diag_indices(n_keep)] += shift
            h_blocks[:, np.arange(blk), np.arange(blk)] += shift

        np.linalg.cholesky(h_blocks)  # positive-definiteness gate for every block
        inv_times_coupling = np.linalg.solve(h_blocks, coupling.transpose(1, 2, 0))  # (B, blk, n_keep)
        schur = h_kept - coupling.reshape(n_keep, -1) @ inv_times_coupling.reshape(-1, n_keep)

        r_kept = rhs[self.kept_idx]
        r_blocks = rhs[self.elim_idx].reshape(n_blocks, blk)
        u = np.linalg.solve(h_blocks, r_blocks[:, :, np.newaxis])[:, :, 0]
        reduced = r_kept - coupling.reshape(n_keep, -1) @ u.ravel()

        factor = scipy.linalg.cho_factor(schur, lower=True, check_finite=False)
        delta_kept = scipy.linalg.cho_solve(factor, reduced, check_finite=False)

        back = np.tensordot(delta_kept, coupling, axes=(0, 0))  # (B, blk)
        delta_blocks = np.linalg.solve(h_blocks, (r_blocks - back)[:, :, np.newaxis])[:, :, 0]

        delta = np.empty(self.n)
        delta[self.kept_idx] = delta_kept
        delta[self.elim_idx] = delta_blocks.ravel()
        return delta


def _barrier_value(f_value: float, mu: float, slacks: np.ndarray) -> float:
    return -f_value - mu * float(np.sum(np.log(slacks)))


def _center(c_matrix, b, objective, z, slacks, mu, options, deadline, counters):
    """Newton-center ``phi_mu`` from ``z``; returns (z, slacks, flag, last_step).

    ``flag`` is one of "converged", "maxiter", "time", "stall".  ``last_step``
    is the final Newton direction (used for corrected dual estimates).
    Iterates remain strictly feasible throughout.
    """
    delta = None
    for _ in range(options.max_newton):
        if deadline is not None and time.perf_counter() > deadline:
            return z, slacks, "time", delta
        f_value, grad_free, hess_free = objective.value_grad_hess(z)
        inv_s = 1.0 / slacks
        grad_phi = -objective.grad_full(grad_free) + mu * (c_matrix.T @ inv_s)
        rhs = -grad_phi
        delta, dec_sq = counters["kkt"].step(mu * inv_s**2, -hess_free, rhs, options.reg_floor)
        counters["iterations"] += 1
        if not np.isfinite(dec_sq):
            raise np.linalg.LinAlgError("Newton decrement is not finite")
        if 0.5 * dec_sq <= options.newton_tol:
            return z, slacks, "converged", delta

        step_dir = c_matrix @ delta
        increasing = step_dir > 0.0
        alpha = 1.0
        if np.any(increasing):
            alpha = min(1.0, 0.99 * float(np.min(slacks[increasing] / step_dir[increasing])))
        phi_here = _barrier_value(f_value, mu, slacks)
        slope = float(grad_phi @ delta)  # equals -dec_sq
        accepted = False
        while alpha >= 1e-16:
            z_new = z + alpha * delta
            s_new = b - c_matrix @ z_new
            if np.min(s_new) > 0.0:
                try:
                    phi_new = _barrier_value(objective.value(z_new), mu, s_new)
                except DomainError:
                    phi_new = np.inf
                if phi_new <= phi_here + options.armijo * alpha * slope:
                    z, slacks = z_new, s_new
                    accepted = True
                    break
            alpha *= options.backtrack
        if not accepted:
            return z, slacks, "stall", delta
    return z, slacks, "maxiter", delta


def maximize(
    system: LinearInequalitySystem,
    objective: EmbeddedObjective,
    x0,
    options: SolverOptions | None = None,
    deadline: float | None = None,
) -> SolveResult:
    """Maximize a concave objective over ``C z <= b`` from a strictly feasible ``x0``."""
    options = options or SolverOptions()
    t0 = time.perf_counter()
    z = np.array(x0, dtype=float)
    m = system.b.shape[0]
    slacks = system.slacks(z)
    if np.min(slacks) <= 0.0:
        raise DomainError("x0 is not strictly feasible")

    # Small systems without elimination blocks run on dense BLAS; sparse
    # algebra only pays off for the lifted triangular systems.
    c_op = system.C
    if not system.layout.elim_blocks and system.C.shape[0] * system.C.shape[1] <= 500_000:
        c_op = system.C.toarray()
    kkt = _KKTSolver(c_op, system.layout.n, tuple(system.layout.elim_blocks), objective.free_idx)
    counters = {"iterations": 0, "kkt": kkt}
    stage_objectives: list[float] = []
    mu = options.mu0
    status = None
    message = ""
    last_step = None
    while True:
        try:
            z, slacks, flag, last_step = _center(c_op, system.b, objective, z, slacks, mu, options, deadline, counters)
        except np.linalg.LinAlgError as exc:
            status, message = NUMERICAL_FAILURE, f"Newton system factorization failed: {exc}"
            break
        stage_objectives.append(objective.value(z))
        if flag == "time":
            status, message = MAX_ITERATIONS, "time limit reached"
            break
        if flag == "stall":
            status, message = NUMERICAL_FAILURE, "line search stalled"
            break
        if m * mu < options.gap_tol:
            status = OPTIMAL if flag == "converged" else MAX_ITERATIONS
            if status == MAX_ITERATIONS:
                message = "final barrier stage did not converge"
            break
        mu *= options.mu_factor

    result = SolveResult(
        status=status,
        z=z,
        objective_value=float(objective.value(z)),
        iterations=counters["iterations"],
        wall_time=time.perf_counter() - t0,
        stage_objectives=stage_objectives,
        message=message,
    )
    if status == OPTIMAL:
        # Newton-corrected dual estimate: first-order update of mu/s along the
        # final step, which cancels the barrier term of the stationarity
        # residual at an approximate center.
        inv_s = 1.0 / slacks
        duals = mu * inv_s
        if last_step is not None:
            duals = np.maximum(duals + (mu * inv_s**2) * (c_op @ last_step), 0.0)
        residual = kkt_residual(system, objective, z, duals)
        result.kkt_residual = residual
        _, grad_free, _ = objective.value_grad_hess(z)
        scale = 1.0 + float(np.max(np.abs(grad_free), initial=0.0))
        if residual > options.kkt_tol * scale:
            result.status = NUMERICAL_FAILURE
            result.message = f"KKT residual {residual:.3e} above tolerance"
    return result


def kkt_residual(system: LinearInequalitySystem, objective: EmbeddedObjective, z, duals) -> float:
    """Max of the stationarity residual ``|grad f - C^T duals|_inf`` and the
    complementarity measure ``max_i duals_i * slack_i`` at a strictly feasible ``z``."""
    z = np.asarray(z, dtype=float)
    duals = np.asarray(duals, dtype=float)
    _, grad_free, _ = objective.value_grad_hess(z)
    stationarity = objective.grad_full(grad_free) - system.C.T @ duals
    slacks = system.slacks(z)
    return max(float(np.max(np.abs(stationarity))), float(np.max(duals * slacks)))


def _phase1_system(system: LinearInequalitySystem) -> LinearInequalitySystem:
    """Auxiliary system over (z, s): ``C z - s 1 <= b`` and ``-s <= 1``."""
    m, n = system.shape
    extra_col = scipy.sparse.csr_matrix(-np.ones((m, 1)))
    top = scipy.sparse.hstack([system.C, extra_col], format="csr")
    bound_row = scipy.sparse.csr_matrix(
        (np.array([-1.0]), (np.array([0]), np.array([n]))), shape=(1, n + 1)
    )
    c_aux = scipy.sparse.vstack([top, bound_row], format="csr")
    b_aux = np.concatenate([system.b, [1.0]])
    layout = VariableLayout(
        kind="phase1", dim=system.layout.dim, n_generators=system.layout.n_generators,
        horizon=system.layout.horizon, n=n + 1, m=m + 1,
        center=slice(0, 0), free=slice(n, n + 1),
        elim_blocks=tuple(system.layout.elim_blocks),
    )
    return LinearInequalitySystem(c_aux, b_aux, layout, system.assembly_mul_count)


def phase1_feasible_point(
    system: LinearInequalitySystem,
    warm_start=None,
    options: SolverOptions | None = None,
    deadline: float | None = None,
):
    """Find a strictly feasible point with slack margin ``phase1_margin``.

    Returns ``(z, iterations)`` on success and ``(None, iterations)`` when the
    system is infeasible (no point with every slack above the margin exists).
    A warm-start candidate short-circuits the auxiliary solve when its worst
    slack already clears the margin.
    """
    options = options or SolverOptions()
    margin = options.phase1_margin
    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=float)
        if float(np.min(system.slacks(warm))) > margin:
            return warm, 0

    aux = _phase1_system(system)
    n = system.shape[1]
    z0 = np.zeros(n) if warm_start is None else np.asarray(warm_start, dtype=float)
    worst = float(np.max(system.C @ z0 - system.b))
    s0 = max(worst + 1.0, -0.5)
    x0 = np.concatenate([z0, [s0]])

    objective = EmbeddedObjective(
        n + 1,
        np.array([n], dtype=np.intp),
        lambda x: -float(x[0]),
        lambda x: (-float(x[0]), np.array([-1.0]), np.zeros((1, 1))),
    )
    result = maximize(aux, objective, x0, options, deadline)
    iterations = result.iterations
    if result.status not in (OPTIMAL, MAX_ITERATIONS) or result.z is None:
        return None, iterations
    s_star = float(result.z[n])
    if s_star >= -margin:
        return None, iterations
    return result.z[:n].copy(), iterations


def solve_invariance(problem: InvarianceProblem, options: SolverOptions | None = None) -> SolveResult:
    """Assemble, find an interior point, maximize, decode, and certify.

    The reported wall time covers phase 1 and the barrier solve (not
    assembly or certification).  ``volume`` is recomputed from the decoded
    zonotope with the closed-form volume of the parameterization.
    """
    options = options or SolverOptions()
    system = assemble(problem)
    layout = system.layout
    inner = make_objective(problem.objective, problem.parameterization)
    objective = EmbeddedObjective.from_layout(layout, inner)
    warm = warm_start_point(problem, layout)

    t0 = time.perf_counter()
    deadline = None if options.time_limit is None else t0 + options.time_limit
    z0, phase1_iters = phase1_feasible_point(system, warm, options, deadline)
    if z0 is None:
        return SolveResult(
            status=INFEASIBLE, z=None, objective_value=None,
            iterations=0, wall_time=time.perf_counter() - t0,
            phase1_iterations=phase1_iters, message="no strictly feasible point",
        )
    result = maximize(system, objective, z0, options, deadline)
    result.wall_time = time.perf_counter() - t0
    result.phase1_iterations = phase1_iters

    if result.status == OPTIMAL:
        parts = layout.decode(result.z)
        zono = Zonotope(parts["center"], parts["generators"])
        result.zonotope = zono
        result.volume = problem.parameterization.volume(parts["free"])
        result.certificate_ok = check_invariance_certificate(
            problem.system, problem.box, problem.horizon, zono
        )
    return result
