"""``bnskel`` command-line interface.

Exit codes: 0 success, 2 validation/parse error, 3 solver non-convergence.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import fixtures
from .errors import BnskelError, NotConverged, ParseError, ValidationError
from .experiments import (
    DEFAULT_C1,
    DEFAULT_C2,
    DEFAULT_DELTA,
    SUPPORT_COLUMNS,
    SWEEP_COLUMNS,
    SupportStudyConfig,
    SweepConfig,
    determinism_hash,
    learn_skeleton,
    load_config,
    rows_to_csv,
    run_support_study,
    run_sweep,
)
from .lasso import DEFAULT_MAX_ITER
from .metrics import score as score_supports
from .metrics import skeleton_supports
from .network import Skeleton, generate_network, load_network, save_network
from .sampler import ancestral_sample, load_samples_csv, save_samples_csv
from .theory import theory_report

EXIT_VALIDATION = 2
EXIT_NOT_CONVERGED = 3


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except NotConverged as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_NOT_CONVERGED)
        except (ValidationError, ParseError, BnskelError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_VALIDATION)


def _out_dir(out: str | None) -> Path:
    path = Path(out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _options(config: str | None) -> dict:
    return load_config(config) if config else {}


@click.group(cls=_Group)
@click.option("-v", "--verbose", count=True)
def main(verbose: int) -> None:
    """Learn discrete Bayesian network skeletons by block l1/l2 regression."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("gen-net")
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--fixture", type=click.Choice(sorted(fixtures.NAMED)), help="Write a built-in network instead.")
@click.option("-n", "--nodes", type=int, default=None)
@click.option("-k", "--levels", type=int, default=None)
@click.option("--edge-prob", type=float, default=None)
@click.option("--degree-cap", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--threads", type=int, default=1, help="Accepted for interface symmetry; generation is serial.")
def gen_net(config, fixture, nodes, levels, edge_prob, degree_cap, seed, out, threads):
    """Generate a random network (random DAG, transitive reduction, random CPTs)."""
    opts = _options(config)
    if fixture:
        net = fixtures.NAMED[fixture]()
    else:
        low, high = opts.get("cpt_range", (0.1, 0.9))
        net = generate_network(
            n=nodes if nodes is not None else opts.get("n", 20),
            k=levels if levels is not None else opts.get("k", 4),
            edge_prob=edge_prob if edge_prob is not None else opts.get("edge_prob", 0.5),
            cpt_range=(low, high),
            seed=seed if seed is not None else opts.get("seed", 0),
            degree_cap=degree_cap if degree_cap is not None else opts.get("degree_cap"),
        )
    path = _out_dir(out) / "network.json"
    save_network(net, path)
    click.echo(str(path))


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("-N", "--samples", "N", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="Unused; accepted for symmetry.")
@click.option("--threads", type=int, default=1, help="Accepted for interface symmetry; sampling is serial.")
def sample(network, N, seed, out, config, threads):
    """Draw N ancestral samples from NETWORK into samples.csv."""
    if N < 1:
        raise ValidationError("N must be ≥ 1")
    net = load_network(network)
    path = _out_dir(out) / "samples.csv"
    save_samples_csv(ancestral_sample(net, N, seed), net, path)
    click.echo(str(path))


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.argument("samples", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--scheme", type=click.Choice(["effects", "dummy"]), default=None)
@click.option("--lam", type=float, default=None, help="Fixed lambda for every node (overrides the schedule).")
@click.option("--c1", type=float, default=None)
@click.option("--c2", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--rule", type=click.Choice(["union", "intersection"]), default=None)
@click.option("--center/--no-center", default=None, help="Give each regression an intercept (default on).")
@click.option("--max-iter", type=int, default=None, help="Solver iteration budget per node.")
@click.option("--seed", type=int, default=None, help="Unused; learning is deterministic.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--threads", type=int, default=1)
def learn(network, samples, config, scheme, lam, c1, c2, delta, rule, center, max_iter, seed, out, threads):
    """Learn the skeleton from SAMPLES (CSV); NETWORK supplies node names and levels."""
    opts = _options(config)
    net = load_network(network)
    data = load_samples_csv(samples, net)
    result = learn_skeleton(
        data,
        scheme=scheme or opts.get("scheme", "effects"),
        c1=c1 if c1 is not None else opts.get("c1", DEFAULT_C1),
        c2=c2 if c2 is not None else opts.get("c2", DEFAULT_C2),
        floor=delta if delta is not None else opts.get("delta", DEFAULT_DELTA),
        rule=rule or opts.get("rule", "union"),
        lam=lam if lam is not None else opts.get("lam"),
        center=center if center is not None else opts.get("center", True),
        max_iter=max_iter if max_iter is not None else opts.get("max_iter", DEFAULT_MAX_ITER),
        threads=threads,
    )
    path = _out_dir(out) / "skeleton.json"
    doc = result.to_dict(net.names)
    _write_json(path, doc)
    click.echo(json.dumps(doc["skeleton"]))
    if not result.converged:
        bad = [net.names[f.target] for f in result.fits if not f.converged]
        raise NotConverged(next(f for f in result.fits if not f.converged), f"fits did not converge for {bad}")


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", "samples_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Use empirical moments from this CSV instead of exact enumeration.")
@click.option("--scheme", type=click.Choice(["effects", "dummy"]), default="effects")
@click.option("-N", "N", type=int, default=None, help="Sample size for the lambda thresholds.")
@click.option("--lam", type=float, default=None, help="Lambda for the minimum-weight threshold.")
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Unused; checks are deterministic.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--threads", type=int, default=1)
def check(network, samples_path, scheme, N, lam, config, seed, out, threads):
    """Per-node recoverability certificates (population or empirical)."""
    opts = _options(config)
    net = load_network(network)
    data = load_samples_csv(samples_path, net) if samples_path else None
    if N is None:
        N = opts.get("N", None if data is not None else 10_000)
    report = theory_report(net, scheme, data, N, lam if lam is not None else opts.get("lam"))
    _write_json(_out_dir(out) / "check.json", report.to_dict())
    click.echo(report.table())


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.argument("skeleton", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", type=click.Path(exists=True, dir_okay=False), help="Unused; accepted for symmetry.")
@click.option("--seed", type=int, default=None, help="Unused.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--threads", type=int, default=1)
def score(network, skeleton, config, seed, out, threads):
    """Score a learned skeleton JSON against the true NETWORK."""
    net = load_network(network)
    doc = json.loads(Path(skeleton).read_text())
    edges = doc.get("skeleton", doc).get("edges")
    if edges is None:
        raise ParseError(f"{skeleton}: missing 'edges'")
    try:
        pairs = [(net.index(a), net.index(b)) for a, b in edges]
    except KeyError as exc:
        raise ParseError(f"{skeleton}: unknown node {exc.args[0]!r}") from None
    result = score_supports(skeleton_supports(Skeleton.from_pairs(net.n, pairs)), net)
    body = result.to_dict()
    _write_json(_out_dir(out) / "score.json", body)
    click.echo(json.dumps({k: body[k] for k in ("precision", "recall", "f1")}))


@main.command()
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--threads", type=int, default=None)
def sweep(config, seed, out, threads):
    """Sample-complexity sweep over node counts and control parameters."""
    opts = _options(config)
    if seed is not None:
        opts["seed"] = seed
    if threads is not None:
        opts["threads"] = threads
    cfg = SweepConfig.from_dict(opts)
    text = rows_to_csv(run_sweep(cfg), SWEEP_COLUMNS)
    path = _out_dir(out) / "sweep.csv"
    path.write_text(text)
    click.echo(f"{path} determinism-hash={determinism_hash(text)}")


@main.command("support-study")
@click.option("--config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--threads", type=int, default=1, help="Accepted for interface symmetry.")
def support_study(config, seed, out, threads):
    """Compare mutual incoherence on parents+children against the Markov blanket."""
    opts = _options(config)
    if seed is not None:
        opts["seed"] = seed
    cfg = SupportStudyConfig.from_dict(opts)
    text = rows_to_csv(run_support_study(cfg), SUPPORT_COLUMNS)
    path = _out_dir(out) / "support_study.csv"
    path.write_text(text)
    click.echo(str(path))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
