"""Invariance constraints for affine dynamics, assembled as linear inequalities.

For the dynamics ``x(t+1) = A x(t) + w`` and a state box ``X = [lo, up]``, a
zonotope ``Z = <c | G>`` is checked through its reach sets: with
``drift(t) = sum_{s<t} A^s w``, the reach set at time ``t`` has center
``A^t c + drift(t)`` and generators ``A^t G``, and it lies inside ``X`` iff

    A^t c + drift(t) - |A^t G| 1 >= lo      and
    A^t c + drift(t) + |A^t G| 1 <= up,

where ``|.|`` is the elementwise absolute value and ``|A^t G| 1`` the vector
of row sums.  Requiring this for ``t = 0..T`` yields finitely many
conditions; both parameterizations turn them into linear inequalities
``C z <= b``:

* scaled templates: ``|A^t G diag(gamma)| 1 = |A^t G| gamma`` for
  ``gamma > 0``, so the rows are linear in ``(c, gamma)`` directly;
* triangular generators: the absolute values are lifted exactly with
  auxiliary variables ``M_t >= +- A^t G`` (elementwise); at ``t = 0`` the
  diagonal entries have known positive sign, so only the off-diagonal
  entries get auxiliaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import DimensionError, UnsupportedError
from .numerics import as_matrix, as_vector, power_chain
from .parameterizations import SfgParameterization, UtpdParameterization, make_objective
from .zonotope import Box, Zonotope, affine_image

__all__ = [
    "AffineSystem",
    "InvarianceProblem",
    "VariableLayout",
    "LinearInequalitySystem",
    "drift_sum",
    "reach_zonotope",
    "assemble",
    "assemble_sfg",
    "assemble_utpd",
    "warm_start_point",
    "certificate_violation",
    "check_invariance_certificate",
]


@dataclass(frozen=True)
class AffineSystem:
    """Discrete-time dynamics ``x(t+1) = A x(t) + w``."""

    A: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.A, name="A")
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        w = as_vector(self.w, size=a.shape[0], name="w")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "w", w)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class InvarianceProblem:
    """Maximize a volume objective over zonotopes invariant for ``system`` in ``box``."""

    system: AffineSystem
    box: Box
    horizon: int
    parameterization: SfgParameterization | UtpdParameterization
    objective: str

    def __post_init__(self):
        d = self.system.dim
        if self.box.dim != d:
            raise DimensionError(f"box dimension {self.box.dim} does not match system dimension {d}")
        pdim = self.parameterization.dim
        if pdim != d:
            raise DimensionError(f"parameterization dimension {pdim} does not match system dimension {d}")
        if self.horizon < 0:
            raise DimensionError(f"horizon must be nonnegative, got {self.horizon}")
        make_objective(self.objective, self.parameterization)  # validates the pairing

    @property
    def dim(self) -> int:
        return self.system.dim


def drift_sum(system: AffineSystem, t: int) -> np.ndarray:
    """Accumulated offset ``sum_{s=0}^{t-1} A^{t-1-s} w`` (zero for t = 0)."""
    if t < 0:
        raise DimensionError(f"time must be nonnegative, got {t}")
    drift = np.zeros(system.dim)
    for _ in range(t):
        drift = system.A @ drift + system.w
    return drift


def _drift_table(system: AffineSystem, horizon: int) -> np.ndarray:
    """Stack of drift vectors for t = 0..horizon, shape (horizon+1, d)."""
    drifts = np.zeros((horizon + 1, system.dim))
    for t in range(1, horizon + 1):
        drifts[t] = system.A @ drifts[t - 1] + system.w
    return drifts


def reach_zonotope(system: AffineSystem, zonotope: Zonotope, t: int) -> Zonotope:
    """Reach set at time ``t``: center ``A^t c + drift(t)``, generators ``A^t G``."""
    if zonotope.dim != system.dim:
        raise DimensionError("zonotope dimension does not match system dimension")
    powers = power_chain(system.A, t)
    return affine_image(zonotope, powers[t], drift_sum(system, t))


@dataclass(frozen=True)
class VariableLayout:
    """Where each variable group lives inside the stacked vector ``z``.

    ``center`` and ``free`` always exist; the triangular parameterization adds
    ``aux0`` (off-diagonal absolute values at t = 0) and ``lifted`` (the
    ``M_t`` blocks for t >= 1).  ``elim_blocks`` lists, for the Newton solver,
    groups of lifted variables whose Hessian block is mutually independent:
    one group per (t, state row), each of size d.
    """

    kind: str
    dim: int
    n_generators: int
    horizon: int
    n: int
    m: int
    center: slice
    free: slice
    aux0: slice | None = None
    lifted: slice | None = None
    elim_blocks: tuple = ()
    parameterization: object = None

    def decode(self, z) -> dict:
        """Split a solution vector into named parts including the zonotope."""
        z = as_vector(z, size=self.n, name="z")
        param = self.parameterization
        c = z[self.center].copy()
        free = z[self.free].copy()
        out = {"center": c, "free": free, "generators": param.effective_generators(free)}
        if self.kind == "sfg":
            out["gamma"] = free
        if self.aux0 is not None:
            out["aux0"] = z[self.aux0].copy()
        if self.lifted is not None:
            out["lifted"] = z[self.lifted].reshape(self.horizon, self.dim, self.dim).copy()
        return out

    def encode(self, center, free, aux0=None, lifted=None) -> np.ndarray:
        """Inverse of :meth:`decode` (lossless round trip)."""
        z = np.zeros(self.n)
        z[self.center] = as_vector(center, size=self.dim, name="center")
        z[self.free] = as_vector(free, size=self.free.stop - self.free.start, name="free")
        if self.aux0 is not None:
            if aux0 is None:
                raise DimensionError("this layout requires aux0 values")
            z[self.aux0] = as_vector(aux0, size=self.aux0.stop - self.aux0.start, name="aux0")
        if self.lifted is not None:
            if lifted is None:
                raise DimensionError("this layout requires lifted values")
            lifted = np.asarray(lifted, dtype=float)
            z[self.lifted] = lifted.reshape(-1)
        return z

    def zonotope_of(self, z) -> Zonotope:
        parts = self.decode(z)
        return Zonotope(parts["center"], parts["generators"])


@dataclass(frozen=True)
class LinearInequalitySystem:
    """Linear inequalities ``C z <= b`` with a variable layout.

    ``C`` is stored sparse (CSR); ``assembly_mul_count`` records the number
    of scalar multiplications spent assembling (power chain plus coefficient
    products), used by the complexity bookkeeping tests.
    """

    C: scipy.sparse.csr_matrix
    b: np.ndarray
    layout: VariableLayout
    assembly_mul_count: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.C.shape

    def dense(self) -> np.ndarray:
        return self.C.toarray()

    def slacks(self, z) -> np.ndarray:
        return self.b - self.C @ np.asarray(z, dtype=float)


def _triangle_offsets(d: int) -> np.ndarray:
    """Packed position of entry (k, k) for the row-major upper triangle."""
    k = np.arange(d)
    return k * d - k * (k - 1) // 2


def assemble(problem: InvarianceProblem) -> LinearInequalitySystem:
    """Assemble the constraint system for either parameterization."""
    if problem.parameterization.kind == "sfg":
        return assemble_sfg(problem)
    if problem.parameterization.kind == "utpd":
        return assemble_utpd(problem)
    raise UnsupportedError(f"unknown parameterization kind {problem.parameterization.kind!r}")


def assemble_sfg(problem: InvarianceProblem) -> LinearInequalitySystem:
    """Rows, for t = 0..T: d "lower" rows ``-A^t c + |A^t G| gamma <= drift - lo``
    then d "upper" rows ``A^t c + |A^t G| gamma <= up - drift``; finally the p
    scale-floor rows ``-gamma <= -scale_floor``.  n = d + p, m = 2d(T+1) + p.
    """
    param = problem.parameterization
    if param.kind != "sfg":
        raise UnsupportedError("assemble_sfg requires the scaled-template parameterization")
    d, p, T = problem.dim, param.n_generators, problem.horizon
    n = d + p
    m = 2 * d * (T + 1) + p
    powers = power_chain(problem.system.A, T)
    drifts = _drift_table(problem.system, T)
    lo, up = problem.box.lower, problem.box.upper

    c_mat = np.zeros((m, n))
    b = np.zeros(m)
    for t in range(T + 1):
        abs_rows = np.abs(powers[t] @ param.template)      # |A^t G|, (d, p)
        base = 2 * d * t
        c_mat[base:base + d, :d] = -powers[t]
        c_mat[base:base + d, d:] = abs_rows
        b[base:base + d] = drifts[t] - lo
        c_mat[base + d:base + 2 * d, :d] = powers[t]
        c_mat[base + d:base + 2 * d, d:] = abs_rows
        b[base + d:base + 2 * d] = up - drifts[t]
    floor_base = 2 * d * (T + 1)
    c_mat[floor_base + np.arange(p), d + np.arange(p)] = -1.0
    b[floor_base:] = -param.scale_floor

    layout = VariableLayout(
        kind="sfg", dim=d, n_generators=p, horizon=T, n=n, m=m,
        center=slice(0, d), free=slice(d, d + p), parameterization=param,
    )
    mul_count = T * d**3 + (T + 1) * d * d * p
    return LinearInequalitySystem(scipy.sparse.csr_matrix(c_mat), b, layout, mul_count)


def assemble_utpd(problem: InvarianceProblem) -> LinearInequalitySystem:
    """Exact lifting of the triangular-parameterization constraints.

    Variables: center c (d), packed triangle g (d(d+1)/2), off-diagonal
    auxiliaries at t = 0 (d(d-1)/2, since the diagonal has known sign), and
    for each t = 1..T a full auxiliary matrix ``M_t`` (d^2) with
    ``M_t >= +-(A^t G)`` elementwise.  Row order: d diagonal-floor rows;
    t = 0 lower/upper box rows; t = 0 off-diagonal aux rows (pairs +,-);
    then per t >= 1 the 2 d^2 aux rows (pairs +,-) followed by the 2d box
    rows (lower then upper).
    """
    param = problem.parameterization
    if param.kind != "utpd":
        raise UnsupportedError("assemble_utpd requires the triangular parameterization")
    d, T = problem.dim, problem.horizon
    n_g = d * (d + 1) // 2
    n_aux0 = d * (d - 1) // 2
    n = d + n_g + n_aux0 + T * d * d
    m = d + 2 * d + d * (d - 1) + T * (2 * d * d + 2 * d)
    powers = power_chain(problem.system.A, T)
    drifts = _drift_table(problem.system, T)
    lo, up = problem.box.lower, problem.box.upper

    g_off = d                      # packed triangle starts after the center
    aux0_off = d + n_g
    m_off = aux0_off + n_aux0      # M_1 starts here; M_t block is d*d wide
    tri_offsets = _triangle_offsets(d)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    data: list[np.ndarray] = []
    b = np.zeros(m)

    def put(r, c, v):
        rows.append(np.asarray(r, dtype=np.intp).ravel())
        cols.append(np.asarray(c, dtype=np.intp).ravel())
        data.append(np.asarray(v, dtype=float).ravel())

    # Diagonal floor rows: -G[i, i] <= -diag_floor.
    put(np.arange(d), g_off + tri_offsets, -np.ones(d))
    b[:d] = -param.diag_floor

    # t = 0 box rows: |G| row sums are G[i, i] + sum_{j > i} aux0[i, j].
    base = d
    idx = np.arange(d)
    put(base + idx, idx, -np.ones(d))                       # lower rows: -c
    put(base + d + idx, idx, np.ones(d))                    # upper rows: +c
    for half in (base, base + d):
        put(half + idx, g_off + tri_offsets, np.ones(d))    # diagonal entries
    aux0_pos = np.empty((d, d), dtype=np.intp)              # position of aux0[i, j]
    pos = 0
    for i in range(d):
        for j in range(i + 1, d):
            aux0_pos[i, j] = aux0_off + pos
            pos += 1
    for i in range(d):
        if i + 1 < d:
            cset = aux0_pos[i, i + 1:]
            put(np.full(d - i - 1, base + i), cset, np.ones(d - i - 1))
            put(np.full(d - i - 1, base + d + i), cset, np.ones(d - i - 1))
    b[base:base + d] = drifts[0] - lo
    b[base + d:base + 2 * d] = up - drifts[0]

    # t = 0 off-diagonal aux rows: +-G[i, j] - aux0[i, j] <= 0, pairs (+, -).
    base = 3 * d
    pair = 0
    for i in range(d):
        for j in range(i + 1, d):
            g_col = g_off + tri_offsets[i] + (j - i)
            r_plus, r_minus = base + 2 * pair, base + 2 * pair + 1
            put([r_plus, r_plus], [g_col, aux0_pos[i, j]], [1.0, -1.0])
            put([r_minus, r_minus], [g_col, aux0_pos[i, j]], [-1.0, -1.0])
            pair += 1

    # Column positions of the packed entries in column j: G[0..j, j].
    g_cols_by_col = [g_off + tri_offsets[: j + 1] + (j - np.arange(j + 1)) for j in range(d)]

    row_base = 3 * d + d * (d - 1)
    for t in range(1, T + 1):
        pt = powers[t]
        aux_base = row_base
        m_cols = m_off + (t - 1) * d * d
        for j in range(d):
            gcols = g_cols_by_col[j]                         # (j+1,) packed columns
            coeff = pt[:, : j + 1]                           # (d, j+1): row i -> (A^t)[i, 0..j]
            r_plus = aux_base + 2 * (np.arange(d) * d + j)
            r_minus = r_plus + 1
            put(np.repeat(r_plus, j + 1), np.tile(gcols, d), coeff)
            put(np.repeat(r_minus, j + 1), np.tile(gcols, d), -coeff)
            mcol = m_cols + np.arange(d) * d + j
            put(r_plus, mcol, -np.ones(d))
            put(r_minus, mcol, -np.ones(d))
        # b stays zero for aux rows.
        box_base = aux_base + 2 * d * d
        put(np.repeat(box_base + idx, d), np.tile(idx, d), -pt)
        put(np.repeat(box_base + d + idx, d), np.tile(idx, d), pt)
        all_m = m_cols + np.arange(d * d)
        put(np.repeat(box_base + idx, d), all_m, np.ones(d * d))
        put(np.repeat(box_base + d + idx, d), all_m, np.ones(d * d))
        b[box_base:box_base + d] = drifts[t] - lo
        b[box_base + d:box_base + 2 * d] = up - drifts[t]
        row_base = box_base + 2 * d

    assert row_base == m
    c_mat = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(m, n)
    ).tocsr()

    blocks = tuple(
        np.arange(m_off + (t - 1) * d * d + i * d, m_off + (t - 1) * d * d + i * d + d, dtype=np.intp)
        for t in range(1, T + 1)
        for i in range(d)
    )
    layout = VariableLayout(
        kind="utpd", dim=d, n_generators=d, horizon=T, n=n, m=m,
        center=slice(0, d), free=slice(g_off, g_off + n_g),
        aux0=slice(aux0_off, aux0_off + n_aux0) if n_aux0 else slice(aux0_off, aux0_off),
        lifted=slice(m_off, n) if T else None,
        elim_blocks=blocks, parameterization=param,
    )
    mul_count = T * d**3 + T * d * d * (d + 1)
    return LinearInequalitySystem(c_mat, b, layout, mul_count)


def warm_start_point(problem: InvarianceProblem, layout: VariableLayout) -> np.ndarray:
    """Candidate interior point: box midpoint, tiny scales, padded auxiliaries.

    Not guaranteed feasible (e.g. for large drift); callers must check the
    slacks and fall back to the auxiliary phase-1 problem if needed.
    """
    param = problem.parameterization
    mid = problem.box.midpoint
    free0 = param.initial_free()
    if layout.kind == "sfg":
        return layout.encode(mid, free0)
    d, T = problem.dim, problem.horizon
    pad = 10.0 * param.diag_floor
    g0 = param.unpack(free0)
    aux0 = np.full(d * (d - 1) // 2, pad)
    powers = power_chain(problem.system.A, T)
    lifted = np.abs(powers[1:] @ g0) + pad if T else None
    return layout.encode(mid, free0, aux0=aux0, lifted=lifted)


def certificate_violation(system: AffineSystem, box: Box, horizon: int, zonotope: Zonotope) -> float:
    """Largest box violation of any reach set over t = 0..horizon (0 if none).

    Evaluates ``A^t c + drift(t) -+ |A^t G| 1`` directly against the box; the
    returned value is ``max(0, max violation)`` over all times/coordinates.
    """
    if zonotope.dim != system.dim or box.dim != system.dim:
        raise DimensionError("system, box and zonotope dimensions must agree")
    powers = power_chain(system.A, horizon)
    drifts = _drift_table(system, horizon)
    worst = 0.0
    for t in range(horizon + 1):
        center = powers[t] @ zonotope.center + drifts[t]
        radius = np.sum(np.abs(powers[t] @ zonotope.generators), axis=1)
        worst = max(
            worst,
            float(np.max(box.lower - (center - radius))),
            float(np.max((center + radius) - box.upper)),
        )
    return max(worst, 0.0)


def check_invariance_certificate(
    system: AffineSystem, box: Box, horizon: int, zonotope: Zonotope, tol: float = 1e-9
) -> bool:
    """True iff every reach set over t = 0..horizon lies in the box within ``tol``."""
    return certificate_violation(system, box, horizon, zonotope) <= tol
