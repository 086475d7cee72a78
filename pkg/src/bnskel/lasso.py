"""Per-node block l1/l2 regularized multivariate least squares.

For target node ``r`` the solver minimizes::

    f(W) = 1/(2N) ||E(X^r) - E(X^rbar) W||_F^2 + lam * sum_i ||vec(W_i)||_2

where ``W_i`` is the block of rows belonging to node ``i``. The loss only sees
the data through ``H = E(X^rbar)^T E(X^rbar) / N`` and
``C = E(X^rbar)^T E(X^r) / N``, so a :class:`Problem` stores those sufficient
statistics. This lets all ``n`` per-node problems share one Gram matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blocks import BlockMatrix, max_eigenvalue
from .encoding import BlockIndexMap, EncodedMatrix
from .errors import NotConverged, ShapeMismatch, ValidationError

DEFAULT_KKT_TOL = 1e-6
DEFAULT_SUPPORT_TOL = 1e-8
DEFAULT_MAX_ITER = 50_000


@dataclass(frozen=True, eq=False)
class Problem:
    hessian: np.ndarray
    cross: np.ndarray
    response_energy: float
    lam: float
    partition: BlockIndexMap
    n_samples: int
    target: int | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValidationError("lambda must be >= 0")
        rho = self.partition.total
        if self.hessian.shape != (rho, rho) or self.cross.shape[0] != rho:
            raise ShapeMismatch(
                f"hessian {self.hessian.shape} / cross {self.cross.shape} do not match width {rho}"
            )

    @property
    def response_width(self) -> int:
        return self.cross.shape[1]

    @classmethod
    def from_data(
        cls,
        design: EncodedMatrix,
        response: EncodedMatrix,
        lam: float,
        target: int | None = None,
        center: bool = False,
    ) -> "Problem":
        """Sufficient statistics of the data; ``center`` adds an unpenalized intercept."""
        X, Y = design.values, response.values
        if center:
            X = X - X.mean(axis=0)
            Y = Y - Y.mean(axis=0)
        if X.shape[0] != Y.shape[0]:
            raise ShapeMismatch("design and response have different sample counts")
        N = X.shape[0]
        return cls(
            hessian=X.T @ X / N,
            cross=X.T @ Y / N,
            response_energy=float(np.sum(Y * Y)) / (2 * N),
            lam=float(lam),
            partition=design.map,
            n_samples=N,
            target=target,
        )

    @classmethod
    def from_gram(
        cls, gram: np.ndarray, full_map: BlockIndexMap, r: int, lam: float, n_samples: int
    ) -> "Problem":
        """Slice the per-node problem out of ``E(X)^T E(X) / N`` over all nodes."""
        others = tuple(i for i in full_map.nodes if i != r)
        design_map = full_map.restrict(others)
        rows = full_map.rows(others)
        tgt = full_map.rows([r])
        return cls(
            hessian=gram[np.ix_(rows, rows)],
            cross=gram[np.ix_(rows, tgt)],
            response_energy=0.5 * float(np.trace(gram[np.ix_(tgt, tgt)])),
            lam=float(lam),
            partition=design_map,
            n_samples=n_samples,
            target=r,
        )

    def with_lambda(self, lam: float) -> "Problem":
        return Problem(
            self.hessian, self.cross, self.response_energy, float(lam),
            self.partition, self.n_samples, self.target,
        )


def loss_and_gradient(problem: Problem, W: np.ndarray) -> tuple[float, np.ndarray]:
    W = np.asarray(W, dtype=np.float64)
    if W.shape != problem.cross.shape:
        raise ShapeMismatch(f"W has shape {W.shape}, expected {problem.cross.shape}")
    HW = problem.hessian @ W
    loss = 0.5 * np.sum(W * HW) - np.sum(W * problem.cross) + problem.response_energy
    return float(loss), HW - problem.cross


def empirical_hessian(design: EncodedMatrix | np.ndarray) -> np.ndarray:
    X = design.values if isinstance(design, EncodedMatrix) else np.asarray(design, dtype=np.float64)
    return X.T @ X / X.shape[0]


def null_threshold(problem: Problem) -> float:
    """Smallest lambda for which ``W = 0`` is optimal: ``||C||_{B,inf,2}``."""
    return float(_block_norms(problem.cross, problem.partition).max(initial=0.0))


def _block_norms(W: np.ndarray, partition: BlockIndexMap) -> np.ndarray:
    if not partition.widths:
        return np.zeros(0)
    row_sq = np.sum(W * W, axis=1)
    return np.sqrt(np.add.reduceat(row_sq, np.asarray(partition.offsets)))


def _prox(Z: np.ndarray, tau: float, partition: BlockIndexMap) -> np.ndarray:
    if tau == 0.0 or Z.shape[0] == 0:
        return Z
    norms = _block_norms(Z, partition)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
    return Z * np.repeat(scale, partition.widths)[:, None]


def kkt_residual(problem: Problem, W: np.ndarray, grad: np.ndarray | None = None) -> float:
    """Worst violation of the block-wise optimality conditions at ``W``."""
    if grad is None:
        _, grad = loss_and_gradient(problem, W)
    lam = problem.lam
    worst = 0.0
    for off, w in zip(problem.partition.offsets, problem.partition.widths):
        wi = W[off : off + w]
        gi = grad[off : off + w]
        norm_w = np.linalg.norm(wi)
        if norm_w == 0.0:
            worst = max(worst, np.linalg.norm(gi) - lam)
        else:
            worst = max(worst, np.linalg.norm(gi + lam * wi / norm_w))
    return float(worst)


def objective(problem: Problem, W: np.ndarray) -> float:
    loss, _ = loss_and_gradient(problem, W)
    return loss + problem.lam * float(_block_norms(W, problem.partition).sum())


@dataclass(eq=False)
class FitResult:
    W_hat: BlockMatrix
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    support: tuple[int, ...]
    lam: float
    target: int | None = None
    block_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        label = (lambda i: names[i]) if names is not None else (lambda i: i)
        return {
            "target": None if self.target is None else label(self.target),
            "lambda": self.lam,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "support": [label(i) for i in self.support],
            "block_norms": {
                str(label(i)): float(v)
                for i, v in zip(self.W_hat.partition.nodes, self.block_norms)
            },
        }


def fit(
    problem: Problem,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    kkt_tol: float = DEFAULT_KKT_TOL,
    support_tol: float = DEFAULT_SUPPORT_TOL,
    init: np.ndarray | None = None,
    accelerate: bool = True,
    strict: bool = True,
    polish: bool = True,
) -> FitResult:
    """Accelerated proximal gradient with objective-based restarts.

    The step is ``1 / lambda_max(H)``, the Lipschitz constant of the loss
    gradient, so no line search is needed. Whenever an accelerated step would
    increase the objective, momentum is reset and a plain proximal step is
    taken from the current iterate instead, which keeps the objective
    sequence nonincreasing.

    First-order steps stall on ill-conditioned ``H``: a small gradient can
    still leave ``W`` far from the minimizer. With ``polish`` the result is
    refined by Newton steps on the nonzero blocks, where the objective is
    smooth; a step is kept only if it lowers both objective and KKT residual.

    Raises :class:`NotConverged` (carrying the last iterate) when ``strict``
    and the KKT residual is still above ``kkt_tol`` after ``max_iter`` steps.
    """
    H, C, lam, part = problem.hessian, problem.cross, problem.lam, problem.partition
    x = np.zeros_like(C) if init is None else np.array(init, dtype=np.float64)
    if x.shape != C.shape:
        raise ShapeMismatch(f"init has shape {x.shape}, expected {C.shape}")
    L = max_eigenvalue(H)

    def obj(W, HW):
        return (
            0.5 * np.sum(W * HW) - np.sum(W * C) + problem.response_energy
            + lam * _block_norms(W, part).sum()
        )

    Hx = H @ x
    fx = obj(x, Hx)
    residual = kkt_residual(problem, x, Hx - C)
    iterations = 0
    if L <= 0.0:
        # H == 0: loss is constant in W, W = 0 is optimal
        x = np.zeros_like(C)
        Hx = H @ x
        fx = obj(x, Hx)
        residual = kkt_residual(problem, x, Hx - C)
    else:
        step = 1.0 / L
        y, Hy, t = x, Hx, 1.0
        while residual > kkt_tol and iterations < max_iter:
            iterations += 1
            z = _prox(y - step * (Hy - C), step * lam, part)
            Hz = H @ z
            fz = obj(z, Hz)
            if fz > fx:
                t = 1.0
                z = _prox(x - step * (Hx - C), step * lam, part)
                Hz = H @ z
                fz = obj(z, Hz)
            if accelerate:
                t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                beta = (t - 1.0) / t_next
                y = z + beta * (z - x)
                Hy = Hz + beta * (Hz - Hx)
                t = t_next
            else:
                y, Hy = z, Hz
            x, Hx, fx = z, Hz, fz
            residual = kkt_residual(problem, x, Hx - C)

    if polish and L > 0.0:
        x, fx, residual = _polish(problem, x, fx, residual)

    norms = _block_norms(x, part)
    support = tuple(i for i, v in zip(part.nodes, norms) if v > support_tol)
    result = FitResult(
        W_hat=BlockMatrix(x, part),
        objective=float(fx),
        kkt_residual=residual,
        iterations=iterations,
        converged=residual <= kkt_tol,
        support=support,
        lam=lam,
        target=problem.target,
        block_norms=norms,
    )
    if strict and not result.converged:
        raise NotConverged(result)
    return result


def _polish(problem: Problem, W: np.ndarray, f: float, residual: float, steps: int = 8):
    H, C, lam, part = problem.hessian, problem.cross, problem.lam, problem.partition
    q = C.shape[1]
    for _ in range(steps):
        norms = _block_norms(W, part)
        active = [k for k, v in enumerate(norms) if v > 0.0]
        if not active or residual == 0.0:
            break
        rows = np.concatenate([np.arange(part.offsets[k], part.offsets[k] + part.widths[k]) for k in active])
        WA = W[rows]
        grad = (H[rows] @ W - C[rows]).ravel()
        hess = np.kron(H[np.ix_(rows, rows)], np.eye(q))
        start = 0
        for k in active:
            size = part.widths[k] * q
            w = WA[start // q : (start + size) // q].ravel()
            nw = norms[k]
            grad[start : start + size] += lam * w / nw
            hess[start : start + size, start : start + size] += lam / nw * (np.eye(size) - np.outer(w, w) / nw**2)
            start += size
        step = np.linalg.lstsq(hess, -grad, rcond=None)[0].reshape(WA.shape)
        trial = W.copy()
        trial[rows] = WA + step
        f_trial = objective(problem, trial)
        r_trial = kkt_residual(problem, trial)
        if not (f_trial <= f and r_trial < residual):
            break
        W, f, residual = trial, f_trial, r_trial
    return W, f, residual


def lambda_schedule(
    n: int,
    N: int,
    levels: Sequence[int],
    r: int,
    c1: float,
    c2: float,
    floor: float = 0.0,
) -> float:
    """``c1 * sqrt(log((k_r - 1)(mean_k - 1) n) / N) + c2``, floored at ``floor``."""
    if N < 1:
        raise ValidationError("N must be ≥ 1")
    if c1 < 0 or c2 < 0:
        raise ValidationError("c1 and c2 must be >= 0")
    mean_k = sum(levels) / n
    arg = (levels[r] - 1) * (mean_k - 1) * n
    value = c1 * math.sqrt(max(math.log(arg), 0.0) / N) + c2
    return max(value, floor)
