"""Common-randomness capacity under a one-way rate budget.

The capacity is ``max I(U;X)`` over auxiliary channels ``P(U|X)`` (so that
U - X - Y is Markov) subject to ``I(U;X) - I(U;Y) <= C``.  :func:`cr_capacity`
solves it by multi-start SLSQP; :func:`brute_force_cr_capacity` is an
exhaustive grid search kept deliberately naive so it can serve as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from outage_cr.source import JointSource, conditional_entropy_x_given_y, entropy_bits, entropy_x

LOG2E = 1.0 / math.log(2.0)
FEASIBILITY_TOL = 1e-9


class ResourceCapError(RuntimeError):
    """Raised when a computation would exceed a configured size limit."""


@dataclass(frozen=True)
class AuxChannel:
    """Conditional pmf ``w[u, x] = P(U=u | X=x)``; each column sums to one."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError(f"w must be a non-empty 2-D matrix, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("auxiliary channel entries must be finite and non-negative")
        if np.max(np.abs(w.sum(axis=0) - 1.0)) > 1e-12:
            raise ValueError("every column of w must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_columns(cls, w) -> "AuxChannel":
        """Clip to >= 0 and renormalize columns before validating."""
        w = np.clip(np.asarray(w, dtype=float), 0.0, None)
        return cls(w / w.sum(axis=0, keepdims=True))

    @classmethod
    def identity(cls, size_x: int, size_u: int | None = None) -> "AuxChannel":
        """U = X, embedded in an alphabet of ``size_u >= size_x`` symbols."""
        size_u = size_x if size_u is None else size_u
        w = np.zeros((size_u, size_x))
        w[np.arange(size_x), np.arange(size_x)] = 1.0
        return cls(w)

    @classmethod
    def constant(cls, size_x: int, size_u: int = 1) -> "AuxChannel":
        w = np.zeros((size_u, size_x))
        w[0] = 1.0
        return cls(w)

    @property
    def size_u(self) -> int:
        return self.w.shape[0]

    @property
    def size_x(self) -> int:
        return self.w.shape[1]

    def joint_ux(self, src: JointSource) -> np.ndarray:
        return self.w * src.p_x[None, :]

    def joint_uy(self, src: JointSource) -> np.ndarray:
        return self.w @ src.joint

    def joint_uxy(self, src: JointSource) -> np.ndarray:
        return self.w[:, :, None] * src.joint[None, :, :]

    def p_u(self, src: JointSource) -> np.ndarray:
        return self.w @ src.p_x

    def __eq__(self, other):
        if not isinstance(other, AuxChannel):
            return NotImplemented
        return self.w.shape == other.w.shape and bool(np.array_equal(self.w, other.w))

    def __hash__(self):
        return hash((self.w.shape, self.w.tobytes()))


@dataclass(frozen=True)
class CapacityResult:
    value: float
    argmax: AuxChannel
    excess: float
    budget: float
    iterations: int
    method: str = "optimizer"
    info_uy: float = field(default=0.0, compare=False)


def _check_dims(aux: AuxChannel, src: JointSource):
    if aux.size_x != src.size_x:
        raise ValueError(f"auxiliary channel expects |X|={aux.size_x}, source has |X|={src.size_x}")


def info_pair(aux: AuxChannel, src: JointSource) -> tuple[float, float]:
    """(I(U;X), I(U;Y)) in bits for the joint P_XY(x, y) w[u, x]."""
    _check_dims(aux, src)
    h_u = entropy_bits(aux.p_u(src))
    i_ux = h_u + entropy_bits(src.p_x) - entropy_bits(aux.joint_ux(src))
    i_uy = h_u + entropy_bits(src.p_y) - entropy_bits(aux.joint_uy(src))
    return max(i_ux, 0.0), max(i_uy, 0.0)


def excess_rate(aux: AuxChannel, src: JointSource) -> float:
    i_ux, i_uy = info_pair(aux, src)
    return i_ux - i_uy


def converse_bound_check(result: CapacityResult, src: JointSource, budget: float) -> bool:
    """Necessary conditions any achievable rate obeys: value <= H(X), excess <= C."""
    return result.value <= entropy_x(src) + 1e-9 and result.excess <= budget + 1e-6


# --------------------------------------------------------------------------
# main optimizer


def _xlogx(a):
    return np.where(a > 0, a * np.log(np.where(a > 0, a, 1.0)), 0.0)


class _Objective:
    """I(U;X) and I(U;Y) in bits with gradients, for w flattened row-major."""

    def __init__(self, src: JointSource, size_u: int):
        self.pxy = src.joint
        self.px = src.p_x
        self.py = src.p_y
        self.shape = (size_u, src.size_x)
        self.h_x = -float(np.sum(_xlogx(self.px)))
        self.h_y = -float(np.sum(_xlogx(self.py)))

    def values(self, flat):
        w = np.clip(flat.reshape(self.shape), 0.0, None)
        pu = w @ self.px
        pux = w * self.px[None, :]
        puy = w @ self.pxy
        h_u = -np.sum(_xlogx(pu))
        i_ux = (h_u + self.h_x + np.sum(_xlogx(pux))) * LOG2E
        i_uy = (h_u + self.h_y + np.sum(_xlogx(puy))) * LOG2E
        return i_ux, i_uy

    def grads(self, flat):
        w = np.clip(flat.reshape(self.shape), 1e-300, None)
        pu = np.clip(w @ self.px, 1e-300, None)
        puy = np.clip(w @ self.pxy, 1e-300, None)
        log_pu = np.log(pu)[:, None]
        g_ux = self.px[None, :] * (np.log(w) - log_pu)
        g_uy = np.log(puy) @ self.pxy.T - self.px[None, :] * log_pu
        # floor keeps SLSQP away from -inf at the simplex boundary
        g_ux = np.maximum(g_ux, -1e3) * LOG2E
        g_uy = np.maximum(g_uy, -1e3) * LOG2E
        return g_ux.ravel(), g_uy.ravel()


def _mix_to_boundary(obj: _Objective, w_from: np.ndarray, w_to: np.ndarray, budget: float, iters: int = 60):
    """Largest t in [0, 1] with excess(t*w_from + (1-t)*w_to) <= budget, by bisection.

    ``w_to`` must itself be feasible.
    """

    def excess(t):
        i_ux, i_uy = obj.values((t * w_from + (1 - t) * w_to).ravel())
        return i_ux - i_uy

    if excess(1.0) <= budget:
        return w_from
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if excess(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo * w_from + (1 - lo) * w_to


@dataclass(frozen=True)
class OptimizerOptions:
    seed: int = 0
    random_starts: int = 6
    boundary_starts: int = 3
    size_u: int | None = None
    max_passes: int = 5
    tol: float = 1e-9
    maxiter: int = 200


def _starting_points(obj: _Objective, budget: float, opts: OptimizerOptions, rng) -> list[np.ndarray]:
    size_u, size_x = obj.shape
    const = np.zeros(obj.shape)
    const[0] = 1.0
    ident = np.zeros(obj.shape)
    ident[np.arange(size_x), np.arange(size_x)] = 1.0
    uniform_x = np.zeros(obj.shape)
    uniform_x[:size_x] = 1.0 / size_x
    # erasure: U = X or an extra symbol
    erasure = np.zeros(obj.shape)
    erasure[-1] = 1.0

    starts = []
    # boundary-tracking starts: scale mixtures of U = X with a constant U
    for target in (const, uniform_x, erasure):
        w = _mix_to_boundary(obj, ident, target, budget)
        starts.append(w)
    for k in range(opts.boundary_starts):
        t = (k + 1) / (opts.boundary_starts + 1)
        noisy = (1 - t) * ident + t * rng.dirichlet(np.ones(size_u), size=size_x).T
        starts.append(_mix_to_boundary(obj, noisy, const, budget))
    for _ in range(opts.random_starts):
        w = rng.dirichlet(np.full(size_u, 0.5), size=size_x).T
        starts.append(_mix_to_boundary(obj, w, const, budget))
    return starts


def _repair(obj: _Objective, flat: np.ndarray, budget: float) -> np.ndarray:
    w = np.clip(flat.reshape(obj.shape), 0.0, None)
    w = w / w.sum(axis=0, keepdims=True)
    const = np.zeros(obj.shape)
    const[0] = 1.0
    return _mix_to_boundary(obj, w, const, budget - 1e-12)


def _local_search(obj: _Objective, w0: np.ndarray, budget: float, opts: OptimizerOptions):
    size_u, size_x = obj.shape
    n = size_u * size_x
    col_sum = np.zeros((size_x, n))
    for x in range(size_x):
        col_sum[x, x::size_x] = 1.0

    constraints = [
        {"type": "eq", "fun": lambda f: col_sum @ f - 1.0, "jac": lambda f: col_sum},
        {
            "type": "ineq",
            "fun": lambda f: budget - np.subtract(*obj.values(f)),
            "jac": lambda f: -np.subtract(*obj.grads(f)),
        },
    ]
    best = _repair(obj, w0.ravel(), budget)
    best_val = obj.values(best.ravel())[0]
    iterations = 0
    for _ in range(opts.max_passes):
        res = minimize(
            lambda f: -obj.values(f)[0],
            best.ravel(),
            jac=lambda f: -obj.grads(f)[0],
            method="SLSQP",
            bounds=[(0.0, 1.0)] * n,
            constraints=constraints,
            options={"maxiter": opts.maxiter, "ftol": 1e-12},
        )
        iterations += int(res.nit)
        cand = _repair(obj, res.x, budget)
        val = obj.values(cand.ravel())[0]
        if val <= best_val + opts.tol:
            if val > best_val:
                best, best_val = cand, val
            break
        best, best_val = cand, val
    return best, best_val, iterations


def cr_capacity(src: JointSource, budget: float, opts: OptimizerOptions | None = None) -> CapacityResult:
    """Maximize I(U;X) subject to I(U;X) - I(U;Y) <= budget, with |U| <= |X| + 1."""
    if not budget >= 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    opts = opts or OptimizerOptions()
    size_x = src.size_x
    size_u = opts.size_u or size_x + 1
    obj = _Objective(src, size_u)

    # U = X attains the upper bound H(X) whenever it is feasible
    ident = AuxChannel.identity(size_x, size_u)
    i_ux, i_uy = info_pair(ident, src)
    if i_ux - i_uy <= budget or budget >= conditional_entropy_x_given_y(src):
        return CapacityResult(i_ux, ident, max(i_ux - i_uy, 0.0), budget, 0, "optimizer", i_uy)

    rng = np.random.default_rng(opts.seed)
    best, best_val, total_iter = None, -np.inf, 0
    for w0 in _starting_points(obj, budget, opts, rng):
        w, val, it = _local_search(obj, w0, budget, opts)
        total_iter += it
        if val > best_val + 1e-12:
            best, best_val = w, val
    aux = AuxChannel.from_columns(best)
    i_ux, i_uy = info_pair(aux, src)
    if i_ux - i_uy > budget:
        aux = AuxChannel.from_columns(_repair(obj, aux.w.ravel(), budget))
        i_ux, i_uy = info_pair(aux, src)
    return CapacityResult(i_ux, aux, i_ux - i_uy, budget, total_iter, "optimizer", i_uy)


# --------------------------------------------------------------------------
# brute-force oracle

DEFAULT_MAX_POINTS = 50_000_000


def simplex_grid(dim: int, steps: int, warp: float = 1.0) -> np.ndarray:
    """Points of the probability simplex in R^dim on a grid with ``steps`` levels per coordinate.

    With ``warp == 1`` the coordinates are {0, 1/(steps-1), ..., 1}.  Otherwise each
    uniform point t maps to t**warp / sum(t**warp), a bijection of the simplex that
    packs points towards its faces (warp > 1), where entropies are steepest.
    """
    if steps < 2:
        raise ValueError("grid_steps must be >= 2")
    if not warp > 0:
        raise ValueError("warp must be > 0")
    levels = steps - 1

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    grid = np.array(list(compositions(levels, dim)), dtype=float) / levels
    if warp != 1.0:
        grid = grid**warp
        grid /= grid.sum(axis=1, keepdims=True)
    return grid


def _row_entropy_nats(p: np.ndarray) -> np.ndarray:
    return -np.sum(_xlogx(p), axis=-1)


def brute_force_many(
    src: JointSource,
    budgets,
    grid_steps: int = 21,
    card_u: int | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
    chunk: int = 200_000,
    warp: float = 1.0,
) -> list[CapacityResult]:
    """Exhaustive grid search for several budgets in one enumeration pass.

    Relabeling U changes neither I(U;X) nor I(U;Y), so the first column only
    ranges over grid points with non-increasing entries.
    """
    budgets = [float(c) for c in np.atleast_1d(budgets)]
    if any(not c >= 0 for c in budgets):
        raise ValueError("budgets must be >= 0")
    size_x = src.size_x
    card_u = card_u or size_x + 1
    grid = simplex_grid(card_u, grid_steps, warp)
    m = grid.shape[0]
    sorted_rows = np.flatnonzero(np.all(grid[:, :-1] >= grid[:, 1:], axis=1))
    total = sorted_rows.size * m ** (size_x - 1)
    if total > max_points:
        raise ResourceCapError(f"oracle enumeration of {total} points exceeds the cap of {max_points}")

    px, pxy = src.p_x, src.joint
    h_y = _row_entropy_nats(src.p_y)
    h_grid = _row_entropy_nats(grid)

    best_val = [-np.inf] * len(budgets)
    best_idx = [None] * len(budgets)
    best_pair = [(0.0, 0.0)] * len(budgets)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        digits = np.empty((flat.size, size_x), dtype=np.int64)
        rem = flat
        for x in range(size_x - 1, 0, -1):
            rem, digits[:, x] = np.divmod(rem, m)
        digits[:, 0] = sorted_rows[rem]
        w = grid[digits]  # (k, x, u)
        pu = np.einsum("kxu,x->ku", w, px)
        puy = np.einsum("kxu,xy->kuy", w, pxy)
        h_u = _row_entropy_nats(pu)
        h_u_given_x = h_grid[digits] @ px
        h_uy = -np.sum(_xlogx(puy), axis=(1, 2))
        i_ux = (h_u - h_u_given_x) * LOG2E
        i_uy = (h_u + h_y - h_uy) * LOG2E
        exc = i_ux - i_uy
        for b, c in enumerate(budgets):
            vals = np.where(exc <= c + FEASIBILITY_TOL, i_ux, -np.inf)
            k = int(np.argmax(vals))
            if vals[k] > best_val[b]:
                best_val[b] = float(vals[k])
                best_idx[b] = digits[k].copy()
                best_pair[b] = (float(i_ux[k]), float(i_uy[k]))

    results = []
    for b, c in enumerate(budgets):
        aux = AuxChannel.from_columns(grid[best_idx[b]].T)
        i_ux, i_uy = best_pair[b]
        results.append(
            CapacityResult(max(i_ux, 0.0) + 0.0, aux, i_ux - i_uy, c, total, "oracle", max(i_uy, 0.0) + 0.0)
        )
    return results


def brute_force_cr_capacity(
    src: JointSource,
    budget: float,
    grid_steps: int = 21,
    card_u: int | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
    warp: float = 1.0,
) -> CapacityResult:
    """Best grid point of the product of simplices ``w[:, x]`` meeting the budget."""
    if not budget >= 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    return brute_force_many(src, [budget], grid_steps, card_u, max_points, warp=warp)[0]
