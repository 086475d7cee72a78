"""Skeleton learning pipeline and the synthetic experiment harnesses."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoding import BlockIndexMap, Scheme, codebook
from .errors import ValidationError
from .lasso import (
    DEFAULT_KKT_TOL,
    DEFAULT_MAX_ITER,
    FitResult,
    Problem,
    fit,
    lambda_schedule,
)
from .metrics import assemble_skeleton, score, skeleton_supports
from .network import CategoricalNetwork, Skeleton, generate_network
from .sampler import ancestral_sample, SampleMatrix
from .theory import compare_supports, empirical_moments, population_moments

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ["run_id", "n", "k", "cp", "N", "seed", "precision", "recall", "f1", "rule", "status"]
SUPPORT_COLUMNS = ["run_id", "n", "seed", "mode", "nodes", "mipc_holds", "mimb_holds", "mipc_weaker", "status"]


def encoded_gram(
    samples: SampleMatrix, scheme: Scheme, center: bool = False, chunk: int = 65536
) -> tuple[np.ndarray, BlockIndexMap]:
    """``E(X)^T E(X) / N`` over all nodes, accumulated in row chunks.

    With ``center`` the column means are removed first, which is the same as
    fitting an unpenalized intercept in every per-node regression.
    """
    full_map = BlockIndexMap.for_levels(samples.level_counts)
    books = [codebook(m, scheme).astype(np.float64) for m in samples.level_counts]
    gram = np.zeros((full_map.total, full_map.total))
    total = np.zeros(full_map.total)
    for start in range(0, samples.N, chunk):
        block = samples.data[start : start + chunk]
        X = np.concatenate([books[j][block[:, j]] for j in range(samples.n)], axis=1)
        gram += X.T @ X
        total += X.sum(axis=0)
    gram /= samples.N
    if center:
        mean = total / samples.N
        gram -= np.outer(mean, mean)
    return gram, full_map


@dataclass
class LearnResult:
    skeleton: Skeleton
    fits: list[FitResult]
    lambdas: list[float]
    rule: str

    @property
    def supports(self) -> list[set[int]]:
        return [set(f.support) for f in self.fits]

    @property
    def converged(self) -> bool:
        return all(f.converged for f in self.fits)

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        return {
            "rule": self.rule,
            "skeleton": self.skeleton.to_dict(names),
            "fits": [f.to_dict(names) for f in self.fits],
        }


# Tuned on degree-capped n = 20, k = 4 networks; the schedule constants
# have no analytic values.
DEFAULT_C1 = 1.5
DEFAULT_C2 = 0.0
DEFAULT_DELTA = 0.02


def learn_skeleton(
    samples: SampleMatrix,
    scheme: Scheme = "effects",
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    floor: float = DEFAULT_DELTA,
    rule: str = "union",
    lam: float | None = None,
    center: bool = True,
    kkt_tol: float = DEFAULT_KKT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> LearnResult:
    """Fit every node's regularized regression and combine the supports.

    ``lam`` overrides the per-node schedule with one fixed value. ``center``
    gives each regression an unpenalized intercept. Fits that hit
    ``max_iter`` are kept (flagged ``converged=False``) rather than raised.
    """
    gram, full_map = encoded_gram(samples, scheme, center)
    levels = list(samples.level_counts)
    n, N = samples.n, samples.N
    lambdas = [
        lam if lam is not None else lambda_schedule(n, N, levels, r, c1, c2, floor) for r in range(n)
    ]

    def run(r: int) -> FitResult:
        problem = Problem.from_gram(gram, full_map, r, lambdas[r], N)
        return fit(problem, kkt_tol=kkt_tol, max_iter=max_iter, strict=False)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            fits = list(pool.map(run, range(n)))
    else:
        fits = [run(r) for r in range(n)]
    skeleton = assemble_skeleton([set(f.support) for f in fits], rule, n)
    return LearnResult(skeleton, fits, lambdas, rule)


# ---------------------------------------------------------------------------
# sample-complexity sweep
# ---------------------------------------------------------------------------


def samples_for_cp(cp: float, k: int, n: int) -> int:
    """``N = ceil(10^CP * ln((k - 1) n))``, at least 1."""
    return max(1, math.ceil(10.0**cp * math.log((k - 1) * n)))


@dataclass
class SweepConfig:
    n_list: list[int] = field(default_factory=lambda: [20])
    k: int = 4
    cp_list: list[float] = field(default_factory=lambda: [2, 3, 4, 5])
    repeats: int = 5
    edge_prob: float = 0.5
    cpt_range: tuple[float, float] = (0.1, 0.9)
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    delta: float = DEFAULT_DELTA
    seed: int = 0
    degree_cap: int | None = 4
    scheme: str = "effects"
    rule: str = "union"
    center: bool = True
    kkt_tol: float = DEFAULT_KKT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    threads: int = 1

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        self.cp_list = [float(c) if not float(c).is_integer() else int(c) for c in self.cp_list]
        self.cpt_range = tuple(self.cpt_range)
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        if not self.cp_list:
            raise ValidationError("cp_list must be nonempty")
        if not self.n_list or min(self.n_list) < 1:
            raise ValidationError("n_list must hold positive node counts")
        if self.k < 2:
            raise ValidationError("k must be >= 2")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**doc)


def _cell_seed(*coords: int) -> int:
    return int(np.random.SeedSequence([int(c) for c in coords]).generate_state(1)[0])


def sweep_cell(cfg: SweepConfig, n: int, cp: float, repeat: int) -> dict:
    net_seed = _cell_seed(cfg.seed, n, repeat)
    N = samples_for_cp(cp, cfg.k, n)
    sample_seed = _cell_seed(cfg.seed, n, repeat, round(cp * 1000))
    row = {
        "run_id": f"n{n}-cp{cp}-r{repeat}",
        "n": n,
        "k": cfg.k,
        "cp": cp,
        "N": N,
        "seed": sample_seed,
        "rule": cfg.rule,
    }
    try:
        net = generate_network(n, cfg.k, cfg.edge_prob, cfg.cpt_range, net_seed, cfg.degree_cap)
        samples = ancestral_sample(net, N, sample_seed)
        learned = learn_skeleton(
            samples, cfg.scheme, cfg.c1, cfg.c2, cfg.delta, cfg.rule, center=cfg.center,
            kkt_tol=cfg.kkt_tol, max_iter=cfg.max_iter, threads=cfg.threads,
        )
        result = score(skeleton_supports(learned.skeleton), net)
        status = "ok" if learned.converged else "not_converged"
        if result.empty_prediction or result.empty_truth:
            status += ";empty"
        row.update(precision=result.precision, recall=result.recall, f1=result.f1, status=status)
    except Exception as exc:  # recorded per row; the sweep continues
        log.warning("sweep cell %s failed: %s", row["run_id"], exc)
        row.update(precision="", recall="", f1="", status=f"error:{type(exc).__name__}")
    return row


def run_sweep(cfg: SweepConfig) -> list[dict]:
    """One row per ``(n, CP, repeat)`` followed by one mean row per ``(n, CP)``."""
    rows, means = [], []
    for n in cfg.n_list:
        for cp in cfg.cp_list:
            cell = []
            for rep in range(cfg.repeats):
                row = sweep_cell(cfg, n, cp, rep)
                log.info("%s N=%d P=%s R=%s", row["run_id"], row["N"], row["precision"], row["recall"])
                cell.append(row)
            rows.extend(cell)
            good = [r for r in cell if not r["status"].startswith("error")]
            agg = {
                "run_id": f"mean-n{n}-cp{cp}",
                "n": n,
                "k": cfg.k,
                "cp": cp,
                "N": samples_for_cp(cp, cfg.k, n),
                "seed": "",
                "rule": cfg.rule,
                "status": "mean" if good else "mean:empty",
            }
            for key in ("precision", "recall", "f1"):
                agg[key] = float(np.mean([r[key] for r in good])) if good else ""
            means.append(agg)
    return rows + means


def rows_to_csv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def determinism_hash(csv_text: str, exclude: Sequence[str] = ("timestamp",)) -> str:
    """SHA-256 of the CSV content with any excluded columns dropped."""
    reader = csv.reader(io.StringIO(csv_text))
    header = next(reader, [])
    keep = [i for i, name in enumerate(header) if name not in exclude]
    h = hashlib.sha256()
    for line in [header, *reader]:
        h.update(("\x1f".join(line[i] for i in keep) + "\n").encode())
    return h.hexdigest()


def mean_rows(rows: list[dict]) -> list[dict]:
    return [r for r in rows if str(r["status"]).startswith("mean")]


# ---------------------------------------------------------------------------
# MIPC vs MIMB support study
# ---------------------------------------------------------------------------


@dataclass
class SupportStudyConfig:
    n_list: list[int] = field(default_factory=lambda: [30])
    repeats: int = 20
    degree_cap: int | None = 4
    edge_prob: float = 0.5
    cpt_range: tuple[float, float] = (0.1, 0.9)
    N: int = 5000
    seed: int = 0
    scheme: str = "effects"
    enumeration_cap: int = 2**16

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        self.cpt_range = tuple(self.cpt_range)
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "SupportStudyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown support-study config keys: {sorted(unknown)}")
        return cls(**doc)


def support_study_network(cfg: SupportStudyConfig, n: int, net: CategoricalNetwork, seed: int) -> dict:
    """Fractions of nodes satisfying MIPC, MIMB, and MIPC value <= MIMB value."""
    if 2**n <= cfg.enumeration_cap:
        moments, mode = population_moments(net, cfg.scheme, cfg.enumeration_cap), "population"
    else:
        samples = ancestral_sample(net, cfg.N, _cell_seed(seed, 1))
        moments, mode = empirical_moments(samples, cfg.scheme), "empirical"
    results = [compare_supports(net, r, moments) for r in range(n)]
    return {
        "mode": mode,
        "nodes": n,
        "mipc_holds": sum(c["mipc_holds"] for c in results) / n,
        "mimb_holds": sum(c["mimb_holds"] for c in results) / n,
        "mipc_weaker": sum(c["mipc_value"] <= c["mimb_value"] for c in results) / n,
    }


def run_support_study(cfg: SupportStudyConfig) -> list[dict]:
    """Per-network rows plus one node-weighted aggregate row per ``n``."""
    rows, aggs = [], []
    for n in cfg.n_list:
        per_n = []
        for rep in range(cfg.repeats):
            seed = _cell_seed(cfg.seed, n, rep)
            row = {"run_id": f"n{n}-net{rep}", "n": n, "seed": seed}
            try:
                net = generate_network(n, 2, cfg.edge_prob, cfg.cpt_range, seed, cfg.degree_cap)
                row.update(support_study_network(cfg, n, net, seed), status="ok")
            except Exception as exc:
                log.warning("support study %s failed: %s", row["run_id"], exc)
                row.update(mode="", nodes=n, mipc_holds="", mimb_holds="", mipc_weaker="",
                           status=f"error:{type(exc).__name__}")
            per_n.append(row)
        rows.extend(per_n)
        good = [r for r in per_n if r["status"] == "ok"]
        agg = {"run_id": f"mean-n{n}", "n": n, "seed": "", "mode": "", "nodes": sum(r["nodes"] for r in good),
               "status": "mean" if good else "mean:empty"}
        for key in ("mipc_holds", "mimb_holds", "mipc_weaker"):
            agg[key] = float(np.mean([r[key] for r in good])) if good else ""
        aggs.append(agg)
    return rows + aggs


def load_config(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        import tomli

        return tomli.loads(text)
    return json.loads(text)


def config_dict(cfg) -> dict:
    return asdict(cfg)
