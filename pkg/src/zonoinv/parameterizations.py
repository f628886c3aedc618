"""Generator parameterizations with closed-form volumes and derivatives.

Two families are supported:

* **Upper-triangular, positive diagonal** (token ``"utpd"``): the generator
  matrix is square and upper triangular with strictly positive diagonal.  Its
  volume collapses to ``2^d * prod(diag(G))``, so the log-volume is linear in
  the logs of the diagonal entries.

* **Scaled fixed generators** (token ``"sfg"``): a fixed full-row-rank
  template ``G`` (d x p) is scaled columnwise by positive scalars ``gamma``.
  The volume is a multilinear polynomial with one nonnegative coefficient per
  size-d column subset::

      vol(gamma) = sum_J w_J * prod_{i in J} gamma_i,
      w_J = 2^d * sqrt(det(G_J^T G_J)),

  whose log is concave on ``gamma > 0``.

Free variables are packed as flat vectors: the ``p`` scale factors for the
scaled-template family, and the upper-triangle entries in row-major order
(G[0,0], G[0,1], ..., G[0,d-1], G[1,1], ...) for the triangular family.

Objective tokens: ``"ss"`` (sum of scales), ``"slgs"`` (sum of log scales),
``"lgv"`` (log volume).  The first two are heuristic surrogates defined for
the scaled-template family only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, RankDeficientError, UnsupportedError
from .numerics import as_matrix, as_vector, index_subsets, subset_count

__all__ = [
    "SubsetWeights",
    "sfg_precompute_weights",
    "SfgParameterization",
    "UtpdParameterization",
    "utpd_volume",
    "utpd_log_volume_grad",
    "sfg_volume",
    "sfg_log_volume_grad_hess",
    "Objective",
    "make_objective",
    "OBJECTIVE_TOKENS",
]

OBJECTIVE_TOKENS = ("ss", "slgs", "lgv")


@dataclass(frozen=True)
class SubsetWeights:
    """Volume coefficients of a template, one per size-d column subset.

    ``subsets`` has shape (C(p, d), d) with rows in lexicographic order
    (0-based column indices); ``weights[k]`` is the parallelotope volume
    ``2^d * sqrt(det(G_J^T G_J))`` for ``J = subsets[k]``.
    """

    dim: int
    n_columns: int
    subsets: np.ndarray
    weights: np.ndarray

    @property
    def count(self) -> int:
        """Number of stored subsets, C(p, d)."""
        return self.weights.shape[0]

    @property
    def product_term_count(self) -> int:
        """Multiply-accumulate terms per volume evaluation: C(p, d) * d."""
        return int(self.subsets.size)

    def rank_of(self, subset) -> int:
        """Lexicographic rank of a strictly increasing 0-based subset."""
        j = np.asarray(subset, dtype=np.intp)
        d, p = self.dim, self.n_columns
        if j.shape != (d,) or np.any(j[1:] <= j[:-1]) or j[0] < 0 or j[-1] >= p:
            raise DimensionError(f"subset must be strictly increasing 0-based indices of length {d}")
        # Count subsets that precede j lexicographically: for each position i,
        # those that agree on the first i entries and take a smaller value there.
        rank = 0
        prev = -1
        for i in range(d):
            for v in range(prev + 1, j[i]):
                rank += subset_count(p - 1 - v, d - 1 - i)
            prev = int(j[i])
        return rank

    def weight_of(self, subset) -> float:
        """Weight of one subset, looked up by combinatorial rank in O(d)."""
        return float(self.weights[self.rank_of(subset)])


def sfg_precompute_weights(template) -> SubsetWeights:
    """Precompute all subset weights of a full-row-rank template (d x p).

    Each weight is 2^d times the Gram-determinant root of a size-d column
    subset; the subset matrices are square, so that equals the plain absolute
    determinant (degenerate subsets contribute weight 0).  Raises
    :class:`RankDeficientError` if ``p < d`` or the template does not have
    full row rank (all weights zero).
    """
    g = as_matrix(template, name="template")
    d, p = g.shape
    if p < d:
        raise RankDeficientError(f"template with {p} columns in dimension {d} cannot have full row rank")
    subsets = index_subsets(p, d)
    chosen = np.moveaxis(g[:, subsets], 1, 0)          # (C, d, d)
    weights = (2.0 ** d) * np.abs(np.linalg.det(chosen))
    if not np.any(weights > 0.0):
        raise RankDeficientError("template does not have full row rank")
    return SubsetWeights(dim=d, n_columns=p, subsets=subsets, weights=weights)


@dataclass(frozen=True)
class SfgParameterization:
    """Fixed template scaled columnwise: generators ``G @ diag(gamma)``.

    Free variables are the ``p`` positive scales ``gamma``; ``scale_floor``
    is the lower bound imposed on each scale when assembling constraint
    systems.
    """

    template: np.ndarray
    scale_floor: float = 1e-6
    weights: SubsetWeights = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tpl = as_matrix(self.template, name="template")
        if self.scale_floor <= 0.0:
            raise DomainError(f"scale_floor must be positive, got {self.scale_floor}")
        object.__setattr__(self, "template", tpl)
        object.__setattr__(self, "weights", sfg_precompute_weights(tpl))

    kind = "sfg"

    @property
    def dim(self) -> int:
        return self.template.shape[0]

    @property
    def n_generators(self) -> int:
        return self.template.shape[1]

    @property
    def n_free(self) -> int:
        return self.template.shape[1]

    def validate_free(self, gamma) -> np.ndarray:
        gamma = as_vector(gamma, size=self.n_free, name="gamma")
        if np.any(gamma <= 0.0):
            raise DomainError("scales must be strictly positive")
        return gamma

    def effective_generators(self, gamma) -> np.ndarray:
        """Generator matrix ``G @ diag(gamma)``."""
        return self.template * self.validate_free(gamma)[np.newaxis, :]

    def volume(self, gamma) -> float:
        return sfg_volume(self, gamma)

    def log_volume(self, gamma):
        """Log volume with gradient and Hessian in the scales."""
        return sfg_log_volume_grad_hess(self, gamma)

    def initial_free(self) -> np.ndarray:
        """A strictly feasible default scale vector (well above the floor)."""
        return np.full(self.n_free, 10.0 * self.scale_floor)


def sfg_volume(parameterization: SfgParameterization, gamma) -> float:
    """Volume of the scaled template: ``sum_J w_J prod_{i in J} gamma_i``."""
    gamma = parameterization.validate_free(gamma)
    w = parameterization.weights
    return float(np.dot(w.weights, np.prod(gamma[w.subsets], axis=1)))


def sfg_log_volume_grad_hess(parameterization: SfgParameterization, gamma):
    """Value, gradient and Hessian of ``log vol(gamma)``.

    With ``T_J = w_J prod_{i in J} gamma_i`` and ``V = sum_J T_J``:

    * ``dV/dgamma_k   = sum_{J containing k} T_J / gamma_k``
    * ``d2V/dk dl     = sum_{J containing both} T_J / (gamma_k gamma_l)`` for
      ``k != l`` and zero on the diagonal (V is multilinear),

    and the log transform gives ``H = HV/V - outer(g, g)`` with
    ``g = dV/V``.  One pass over the weight table.
    """
    gamma = parameterization.validate_free(gamma)
    w = parameterization.weights
    subsets = w.subsets                       # (C, d)
    factors = gamma[subsets]                  # (C, d)
    terms = w.weights * np.prod(factors, axis=1)   # (C,)
    volume = float(np.sum(terms))
    if volume <= 0.0:
        raise DomainError("volume is not positive at this point")

    p = parameterization.n_free
    grad_v = np.zeros(p)
    hess_v = np.zeros((p, p))
    # Accumulate the derivative of every subset term individually; the cost is
    # one small dense update per term, so it scales with the C(p, d) term
    # count exactly like the volume formula itself.
    for idx, term, row in zip(subsets, terms, factors):
        per = term / row                      # dT/dgamma_k for k in the subset
        grad_v[idx] += per
        block = per[:, np.newaxis] / row[np.newaxis, :]
        np.fill_diagonal(block, 0.0)          # T is multilinear in gamma
        hess_v[np.ix_(idx, idx)] += block

    grad = grad_v / volume
    hess = hess_v / volume - np.outer(grad, grad)
    return float(np.log(volume)), grad, hess


@dataclass(frozen=True)
class UtpdParameterization:
    """Square upper-triangular generators with strictly positive diagonal.

    Free variables are the ``d (d + 1) / 2`` upper-triangle entries in
    row-major order; ``diag_floor`` is the lower bound imposed on the diagonal
    when assembling constraint systems.
    """

    dim: int
    diag_floor: float = 1e-6
    _tri: tuple = field(init=False, repr=False, compare=False)
    _diag_pos: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError(f"dimension must be >= 1, got {self.dim}")
        if self.diag_floor <= 0.0:
            raise DomainError(f"diag_floor must be positive, got {self.diag_floor}")
        rows, cols = np.triu_indices(self.dim)
        object.__setattr__(self, "_tri", (rows, cols))
        object.__setattr__(self, "_diag_pos", np.flatnonzero(rows == cols))

    kind = "utpd"

    @property
    def n_generators(self) -> int:
        return self.dim

    @property
    def n_free(self) -> int:
        return self.dim * (self.dim + 1) // 2

    def triangle_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Row/column index arrays of the packed entries (row-major order)."""
        return self._tri

    def diag_positions(self) -> np.ndarray:
        """Positions of the diagonal entries inside the packed vector."""
        return self._diag_pos

    def pack(self, matrix) -> np.ndarray:
        """Flatten an upper-triangular matrix into the free-variable vector."""
        g = as_matrix(matrix, rows=self.dim, cols=self.dim, name="generators")
        if np.any(np.tril(g, k=-1) != 0.0):
            raise DimensionError("matrix has nonzero entries below the diagonal")
        rows, cols = self.triangle_indices()
        return g[rows, cols].copy()

    def unpack(self, free) -> np.ndarray:
        """Rebuild the upper-triangular matrix from the packed vector."""
        free = as_vector(free, size=self.n_free, name="free variables")
        g = np.zeros((self.dim, self.dim))
        rows, cols = self.triangle_indices()
        g[rows, cols] = free
        return g

    def validate_free(self, free) -> np.ndarray:
        free = as_vector(free, size=self.n_free, name="free variables")
        if np.any(free[self.diag_positions()] <= 0.0):
            raise DomainError("diagonal entries must be strictly positive")
        return free

    def effective_generators(self, free) -> np.ndarray:
        return self.unpack(self.validate_free(free))

    def volume(self, free) -> float:
        return utpd_volume(self.effective_generators(free))

    def log_volume(self, free):
        """Log volume with gradient and Hessian in the packed entries."""
        free = self.validate_free(free)
        diag_pos = self.diag_positions()
        diag = free[diag_pos]
        value = self.dim * np.log(2.0) + float(np.sum(np.log(diag)))
        grad = np.zeros(self.n_free)
        grad[diag_pos] = 1.0 / diag
        hess = np.zeros((self.n_free, self.n_free))
        hess[diag_pos, diag_pos] = -1.0 / diag**2
        return value, grad, hess

    def initial_free(self) -> np.ndarray:
        """A strictly feasible default: ``10 * diag_floor`` times the identity."""
        return self.pack(10.0 * self.diag_floor * np.eye(self.dim))


def utpd_volume(generators) -> float:
    """Volume ``2^d * prod(diag(G))`` of an upper-triangular generator matrix.

    Requires ``G`` square upper triangular with strictly positive diagonal.
    """
    g = as_matrix(generators, name="generators")
    d = g.shape[0]
    if g.shape[1] != d:
        raise DimensionError(f"generator matrix must be square, got {g.shape}")
    if np.any(np.tril(g, k=-1) != 0.0):
        raise DimensionError("generator matrix has nonzero entries below the diagonal")
    diag = np.diag(g)
    if np.any(diag <= 0.0):
        raise DomainError("diagonal entries must be strictly positive")
    return float(2.0 ** d * np.prod(diag))


def utpd_log_volume_grad(generators) -> np.ndarray:
    """Gradient of the log volume in the packed upper-triangle entries.

    Equals ``1 / G[i, i]`` at the diagonal positions and zero elsewhere (the
    Hessian is the matching diagonal ``-1 / G[i, i]^2``; see
    :meth:`UtpdParameterization.log_volume`).
    """
    g = as_matrix(generators, name="generators")
    param = UtpdParameterization(g.shape[0])
    _, grad, _ = param.log_volume(param.pack(g))
    return grad


@dataclass(frozen=True)
class Objective:
    """Concave objective over the free variables of a parameterization."""

    kind: str
    parameterization: SfgParameterization | UtpdParameterization

    @property
    def n_free(self) -> int:
        return self.parameterization.n_free

    def value(self, free) -> float:
        """Objective value only (cheaper than :meth:`value_grad_hess`)."""
        param = self.parameterization
        if self.kind == "lgv":
            if param.kind == "sfg":
                volume = sfg_volume(param, free)
                if volume <= 0.0:
                    raise DomainError("volume is not positive at this point")
                return float(np.log(volume))
            free = param.validate_free(free)
            diag = free[param.diag_positions()]
            return param.dim * np.log(2.0) + float(np.sum(np.log(diag)))
        gamma = param.validate_free(free)
        if self.kind == "ss":
            return float(np.sum(gamma))
        if self.kind == "slgs":
            return float(np.sum(np.log(gamma)))
        raise UnsupportedError(f"unknown objective kind {self.kind!r}")

    def value_grad_hess(self, free):
        """Objective value, gradient and dense Hessian over the free variables."""
        param = self.parameterization
        if self.kind == "lgv":
            return param.log_volume(free)
        gamma = param.validate_free(free)
        if self.kind == "ss":
            return float(np.sum(gamma)), np.ones_like(gamma), np.zeros((gamma.size, gamma.size))
        if self.kind == "slgs":
            hess = np.zeros((gamma.size, gamma.size))
            np.fill_diagonal(hess, -1.0 / gamma**2)
            return float(np.sum(np.log(gamma))), 1.0 / gamma, hess
        raise UnsupportedError(f"unknown objective kind {self.kind!r}")


def make_objective(kind: str, parameterization) -> Objective:
    """Build an objective, checking the kind/parameterization pairing.

    The scale heuristics (``ss``, ``slgs``) are defined only for the
    scaled-template family; ``lgv`` works for both.
    """
    if kind not in OBJECTIVE_TOKENS:
        raise UnsupportedError(f"unknown objective kind {kind!r}; expected one of {OBJECTIVE_TOKENS}")
    if kind in ("ss", "slgs") and parameterization.kind != "sfg":
        raise UnsupportedError(f"objective {kind!r} requires the scaled-template parameterization")
    return Objective(kind=kind, parameterization=parameterization)
