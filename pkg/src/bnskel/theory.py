"""Recoverability certificates for a known network.

All quantities are computed from a :class:`Moments` object: a weighted list of
joint configurations. In population mode the weights are the exact joint
probabilities; in empirical mode they are observed row frequencies. Both the
Hessian ``H = E[E(X_rbar) E(X_rbar)^T]`` and the substitute-model residuals are
evaluated against the same weighted configurations.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .blocks import BlockMatrix, block_norm, min_eigenvalue, solve_spd
from .encoding import BlockIndexMap, Scheme, encode_columns, support_rows
from .errors import AlphaOutOfRange, NotPositiveDefinite, ValidationError
from .network import CategoricalNetwork, markov_blanket
from .sampler import DEFAULT_CAP, SampleMatrix, enumerate_joint

PD_TOL = 1e-10
INF = float("inf")

Mode = Literal["population", "empirical"]


@dataclass(frozen=True, eq=False)
class Moments:
    configurations: np.ndarray
    weights: np.ndarray
    level_counts: tuple[int, ...]
    scheme: Scheme
    mode: Mode
    gram: np.ndarray
    full_map: BlockIndexMap
    n_samples: int | None = None

    @classmethod
    def build(cls, configurations, weights, level_counts, scheme, mode, n_samples=None):
        keep = np.asarray(weights) > 0
        configs = np.asarray(configurations)[keep]
        w = np.asarray(weights, dtype=np.float64)[keep]
        enc = encode_columns(configs, level_counts, range(len(level_counts)), scheme)
        gram = (enc.values * w[:, None]).T @ enc.values
        return cls(configs, w, tuple(level_counts), scheme, mode, gram, enc.map, n_samples)

    @property
    def n(self) -> int:
        return len(self.level_counts)

    def design_map(self, r: int) -> BlockIndexMap:
        return self.full_map.restrict(i for i in range(self.n) if i != r)

    def hessian(self, r: int) -> np.ndarray:
        rows = self.full_map.rows(i for i in range(self.n) if i != r)
        return self.gram[np.ix_(rows, rows)]

    def cross(self, r: int) -> np.ndarray:
        rows = self.full_map.rows(i for i in range(self.n) if i != r)
        return self.gram[np.ix_(rows, self.full_map.rows([r]))]


def population_moments(net: CategoricalNetwork, scheme: Scheme, cap: int = DEFAULT_CAP) -> Moments:
    table = enumerate_joint(net, cap)
    return Moments.build(table.configurations, table.probs, net.level_counts, scheme, "population")


def empirical_moments(samples: SampleMatrix, scheme: Scheme) -> Moments:
    configs, counts = np.unique(samples.data, axis=0, return_counts=True)
    return Moments.build(
        configs, counts / samples.N, samples.level_counts, scheme, "empirical", samples.N
    )


def population_hessian(net: CategoricalNetwork, r: int, scheme: Scheme, cap: int = DEFAULT_CAP):
    """Exact ``H`` for target ``r`` and the block map of its rows."""
    mom = population_moments(net, scheme, cap)
    return mom.hessian(r), mom.design_map(r)


def check_assumption1(H: np.ndarray, rows: Sequence[int], pd_tol: float = PD_TOL) -> tuple[bool, float]:
    """Positive definiteness of ``H[S, S]``; an empty support is trivially fine (``+inf``)."""
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        return True, INF
    lam_min = min_eigenvalue(H[np.ix_(rows, rows)])
    return lam_min > pd_tol, lam_min


def incoherence_matrix(H: np.ndarray, block_map: BlockIndexMap, support: Iterable[int]) -> BlockMatrix:
    """``Q = H[Sc, S] H[S, S]^-1`` partitioned by non-support node."""
    support = set(support)
    rest = [i for i in block_map.nodes if i not in support]
    s_rows = support_rows(block_map, support)
    c_rows = support_rows(block_map, rest)
    part = block_map.restrict(rest)
    if s_rows.size == 0 or c_rows.size == 0:
        return BlockMatrix(np.zeros((c_rows.size, s_rows.size)), part)
    # H_SS symmetric, so Q^T = H_SS^-1 H_{S,Sc}
    Qt = solve_spd(H[np.ix_(s_rows, s_rows)], H[np.ix_(s_rows, c_rows)])
    return BlockMatrix(Qt.T, part)


def check_assumption2(H: np.ndarray, block_map: BlockIndexMap, support: Iterable[int]) -> tuple[bool, float]:
    """Mutual incoherence ``||Q||_{B,inf,1} < 1``. Raises NotPositiveDefinite if ``H_SS`` is singular."""
    value = block_norm(incoherence_matrix(H, block_map, support), math.inf, 1)
    return value < 1.0, value


def substitute_weights(moments: Moments, r: int, support: Iterable[int]) -> BlockMatrix:
    """Population (or plug-in) least-squares weights on the support, zero elsewhere."""
    block_map = moments.design_map(r)
    H, cross = moments.hessian(r), moments.cross(r)
    rows = support_rows(block_map, support)
    W = np.zeros_like(cross)
    if rows.size:
        W[rows] = solve_spd(H[np.ix_(rows, rows)], cross[rows])
    return BlockMatrix(W, block_map)


def residual_bounds(moments: Moments, r: int, W: BlockMatrix | np.ndarray) -> tuple[float, float]:
    """``sigma = max|e| / 2`` over supported configurations, ``mu = max_j E|e_j|``."""
    values = W.values if isinstance(W, BlockMatrix) else np.asarray(W)
    others = [i for i in range(moments.n) if i != r]
    X = encode_columns(moments.configurations, moments.level_counts, others, moments.scheme).values
    Y = encode_columns(moments.configurations, moments.level_counts, [r], moments.scheme).values
    e = Y - X @ values
    sigma = 0.5 * float(np.abs(e).max(initial=0.0))
    mu = float((moments.weights @ np.abs(e)).max(initial=0.0))
    return sigma, mu


def _log_plus(x: float) -> float:
    # log of a count-like argument; arguments <= 1 contribute nothing
    return math.log(x) if x > 1 else 0.0


def theorem1_thresholds(
    alpha: float,
    sigma: float,
    mu: float,
    rho_r: int,
    rho_bar: int,
    n_nonneighbors: int,
    rho_support: int,
    N: int,
    C: float,
    m_bar: int,
    lam: float | None = None,
) -> tuple[float, float]:
    """Lower bound on lambda and the minimum block-weight threshold.

    ``lam`` defaults to the returned lower bound. With ``alpha == 1`` the
    minimum-weight threshold is infinite, as the formula's
    ``alpha / (4 (1 - alpha))`` term diverges.
    """
    if not 0.0 < alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1], got {alpha}")
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    first = (1.0 - alpha) * (math.sqrt(2 * sigma**2 * _log_plus(rho_support * rho_r)) + mu)
    second = math.sqrt(rho_bar) * (
        math.sqrt(2 * sigma**2 * _log_plus(n_nonneighbors * rho_bar * rho_r)) + mu
    )
    lambda_lower = 4.0 / alpha * math.sqrt(rho_r / N) * max(first, second)
    lam = lambda_lower if lam is None else lam
    slack = INF if alpha == 1.0 else alpha / (4.0 * (1.0 - alpha))
    inner = slack + math.sqrt(rho_r) + 1.0
    if inner == INF and lam * rho_support == 0:
        minweight = INF
    else:
        minweight = 4.0 * m_bar / C * inner * math.sqrt(rho_support) * lam
    return lambda_lower, minweight


@dataclass
class NodeReport:
    r: int
    support: list[int]
    lambda_min_HSS: float
    assumption1: bool
    incoherence: float | None
    alpha: float | None
    assumption2: bool
    wstar_blocks: dict[int, float]
    sigma: float
    mu: float
    lambda_lower: float | None
    minweight_threshold: float | None
    minweight_ok: bool | None
    mode: Mode
    notes: list[str] = field(default_factory=list)

    @property
    def min_wstar(self) -> float:
        return min(self.wstar_blocks.values(), default=INF)


def node_report(
    moments: Moments,
    r: int,
    support: Iterable[int],
    N: int | None = None,
    lam: float | None = None,
    pd_tol: float = PD_TOL,
) -> NodeReport:
    support = sorted(set(support))
    block_map = moments.design_map(r)
    H = moments.hessian(r)
    rows = support_rows(block_map, support)
    notes: list[str] = []
    ok1, lam_min = check_assumption1(H, rows, pd_tol)
    incoherence = alpha = None
    ok2 = False
    wstar: dict[int, float] = {}
    sigma = mu = 0.0
    lambda_lower = minweight = None
    minweight_ok = None
    if not support:
        notes.append("isolated node: certificates trivially satisfied")
        ok2, incoherence, alpha = True, 0.0, 1.0
        sigma, mu = residual_bounds(moments, r, np.zeros_like(moments.cross(r)))
    elif not ok1:
        notes.append("H_SS not positive definite")
    else:
        ok2, incoherence = check_assumption2(H, block_map, support)
        alpha = 1.0 - incoherence
        W = substitute_weights(moments, r, support)
        wstar = {i: float(np.linalg.norm(W.block(i))) for i in support}
        sigma, mu = residual_bounds(moments, r, W)
    N_eff = N if N is not None else moments.n_samples
    if ok1 and ok2 and support and N_eff:
        m = moments.level_counts
        rho_r = m[r] - 1
        lambda_lower, minweight = theorem1_thresholds(
            alpha=alpha,
            sigma=sigma,
            mu=mu,
            rho_r=rho_r,
            rho_bar=max(k - 1 for k in m),
            n_nonneighbors=moments.n - 1 - len(support),
            rho_support=int(rows.size),
            N=N_eff,
            C=lam_min,
            m_bar=max(m),
            lam=lam,
        )
        minweight_ok = min(wstar.values()) > minweight
    return NodeReport(
        r=r,
        support=support,
        lambda_min_HSS=lam_min,
        assumption1=ok1,
        incoherence=incoherence,
        alpha=alpha,
        assumption2=ok2,
        wstar_blocks=wstar,
        sigma=sigma,
        mu=mu,
        lambda_lower=lambda_lower,
        minweight_threshold=minweight,
        minweight_ok=minweight_ok,
        mode=moments.mode,
        notes=notes,
    )


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class TheoryReport:
    nodes: list[NodeReport]
    mode: Mode
    scheme: Scheme
    N: int | None
    names: list[str] | None = None

    def to_dict(self) -> dict:
        label = (lambda i: self.names[i]) if self.names else (lambda i: i)
        rows = []
        for rec in self.nodes:
            d = asdict(rec)
            d["r"] = label(rec.r)
            d["support"] = [label(i) for i in rec.support]
            d["wstar_blocks"] = {str(label(i)): v for i, v in rec.wstar_blocks.items()}
            rows.append({k: _finite(v) for k, v in d.items()})
        return {"mode": self.mode, "scheme": self.scheme, "N": self.N, "nodes": rows}

    def table(self) -> str:
        header = ["node", "|S_r|", "lam_min", "incoh", "alpha", "sigma", "mu", "lam_lower", "minweight", "A1", "A2", "W*ok"]
        lines = ["  ".join(f"{h:>9}" for h in header)]
        label = (lambda i: self.names[i]) if self.names else str

        def num(x):
            return "-" if x is None else f"{x:9.4g}"

        for rec in self.nodes:
            cells = [
                f"{label(rec.r):>9}", f"{len(rec.support):>9}", num(rec.lambda_min_HSS),
                num(rec.incoherence), num(rec.alpha), num(rec.sigma), num(rec.mu),
                num(rec.lambda_lower), num(rec.minweight_threshold),
                f"{'pass' if rec.assumption1 else 'FAIL':>9}",
                f"{'pass' if rec.assumption2 else 'FAIL':>9}",
                f"{'-' if rec.minweight_ok is None else ('pass' if rec.minweight_ok else 'FAIL'):>9}",
            ]
            lines.append("  ".join(cells))
        return "\n".join(lines)


def theory_report(
    net: CategoricalNetwork,
    scheme: Scheme = "effects",
    samples: SampleMatrix | None = None,
    N: int | None = None,
    lam: float | None = None,
    cap: int = DEFAULT_CAP,
) -> TheoryReport:
    """Per-node certificates: population mode unless ``samples`` are given."""
    moments = population_moments(net, scheme, cap) if samples is None else empirical_moments(samples, scheme)
    N_eff = N if N is not None else moments.n_samples
    nodes = [node_report(moments, r, net.neighbors(r), N_eff, lam) for r in range(net.n)]
    return TheoryReport(nodes, moments.mode, scheme, N_eff, net.names)


def compare_supports(net: CategoricalNetwork, r: int, moments: Moments) -> dict:
    """Mutual incoherence on parents+children (MIPC) versus Markov blanket (MIMB)."""
    H, block_map = moments.hessian(r), moments.design_map(r)
    out = {}
    for key, support in (("mipc", net.neighbors(r)), ("mimb", markov_blanket(net, r))):
        if not support:
            out[f"{key}_holds"], out[f"{key}_value"] = True, 0.0
            continue
        try:
            out[f"{key}_holds"], out[f"{key}_value"] = check_assumption2(H, block_map, support)
        except NotPositiveDefinite:
            out[f"{key}_holds"], out[f"{key}_value"] = False, INF
    return out


def realization_probe(
    net: CategoricalNetwork, r: int, scheme: Scheme, cap: int = DEFAULT_CAP, pd_tol: float = PD_TOL
) -> tuple[bool, bool]:
    """Rank of the support realization matrix versus positive definiteness of ``H_SS``."""
    support = sorted(net.neighbors(r))
    if not support:
        return True, True
    table = enumerate_joint(net, cap)
    sub = table.configurations[:, support]
    configs, inverse = np.unique(sub, axis=0, return_inverse=True)
    probs = np.bincount(inverse.ravel(), weights=table.probs, minlength=len(configs))
    keep = probs > 0
    levels = [net.level_counts[i] for i in support]
    M = encode_columns(configs[keep], levels, range(len(support)), scheme).values
    full_rank = np.linalg.matrix_rank(M) == M.shape[1]
    H_SS = (M * probs[keep][:, None]).T @ M
    return bool(full_rank), bool(min_eigenvalue(H_SS) > pd_tol)
