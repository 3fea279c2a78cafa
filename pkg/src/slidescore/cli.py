"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 content/render failure in
single-file mode.
"""

from __future__ import annotations

import json
import pathlib
import sys

import click

from .gateway import RenderGateway
from .scoring import ScoringConfig, score_html

# the contract reserves 1 for usage errors (click's default is 2)
click.UsageError.exit_code = 1


def _make_gateway(pool_size: int = 2) -> RenderGateway:
    """Browser-backed gateway when a binary is available, fixture otherwise."""
    from .cdp import chrome_session_factory, find_chrome

    if find_chrome():
        return RenderGateway(session_factory=chrome_session_factory(),
                             pool_size=pool_size)
    return RenderGateway(pool_size=pool_size)


def _scoring_config(shaping_path: str | None) -> ScoringConfig:
    if shaping_path:
        from .rewards import load_shaping_config
        return ScoringConfig(shaping=load_shaping_config(shaping_path))
    return ScoringConfig()


@click.group()
def main():
    """Verifiable layout-quality scoring for rendered HTML slides."""


@main.command()
@click.argument("html_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--pipeline", default="full",
              type=click.Choice(["aspect", "whitespace", "geometry", "full"]))
@click.option("--overlay", type=click.Path(dir_okay=False),
              help="Write the whitespace overlay PNG here.")
@click.option("--shaping", type=click.Path(exists=True, dir_okay=False),
              help="YAML file overriding the reward shaping constants.")
@click.option("--json", "as_json", is_flag=True, help="Emit the full JSON record.")
def score(html_file, pipeline, overlay, shaping, as_json):
    """Score one HTML file and print its metrics and rewards."""
    html = pathlib.Path(html_file).read_text()
    gateway = _make_gateway(pool_size=1)
    try:
        result = score_html(gateway, html, config=_scoring_config(shaping),
                            pipeline=pipeline, return_overlay=overlay is not None)
    finally:
        gateway.close()

    if overlay and result.overlay_png is not None:
        pathlib.Path(overlay).write_bytes(result.overlay_png)

    record = result.to_dict()
    if as_json:
        click.echo(json.dumps(record, indent=2))
    else:
        report = record["metric_report"]
        for key, value in report.items():
            click.echo(f"{key:<18} {value}")
        for name, value in record["reward_vector"]["components"].items():
            click.echo(f"reward/{name:<11} {value:.6f}")
        click.echo(f"valid              {record['reward_vector']['valid']}")

    if result.metric_report.render_error is not None:
        sys.exit(2)


def _iter_batch_requests(source: pathlib.Path):
    if source.is_dir():
        for path in sorted(source.glob("*.html")):
            yield {"html": path.read_text(), "request_id": path.name}
    else:
        with open(source) as fh:
            for line in fh:
                if line.strip():
                    yield json.loads(line)


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Results NDJSON output path.")
@click.option("--server", default=None,
              help="Score through a running service instead of in-process.")
@click.option("--pool", default=2, show_default=True, help="Render session pool size.")
def batch(source, out, server, pool):
    """Score a directory of .html files or an NDJSON request file."""
    requests = list(_iter_batch_requests(pathlib.Path(source)))
    if not requests:
        raise click.UsageError(f"no scoreable inputs found in {source}")

    if server:
        import httpx

        body = "\n".join(json.dumps(r) for r in requests)
        resp = httpx.post(f"{server.rstrip('/')}/v1/score/batch",
                          content=body, timeout=600.0)
        resp.raise_for_status()
        lines = [ln for ln in resp.text.splitlines() if ln.strip()]
    else:
        gateway = _make_gateway(pool_size=pool)
        try:
            lines = []
            for req in requests:
                result = score_html(gateway, req["html"],
                                    pipeline=req.get("pipeline", "full"))
                record = {"request_id": req.get("request_id", ""),
                          **result.to_dict()}
                lines.append(json.dumps(record))
        finally:
            gateway.close()

    pathlib.Path(out).write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {len(lines)} records to {out}")


@main.command()
@click.option("--labels", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--preds", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write the JSON report here as well as printing the table.")
def metaeval(labels, preds, out):
    """Evaluate defect predictions against labeled data, per dimension."""
    from .evalkit import format_table, result_to_json
    from .evalkit import metaeval as run_metaeval

    result = run_metaeval(labels, preds)
    click.echo(format_table(result))
    if out:
        pathlib.Path(out).write_text(json.dumps(result_to_json(result), indent=2))


@main.command("simulate-collapse")
@click.option("--k", default=4, show_default=True, help="Reward components per rollout.")
@click.option("--g", default=8, show_default=True, help="Rollouts per group.")
@click.option("--sigma-sweep", default="1,3,10", show_default=True,
              help="Comma-separated dominant/other sigma ratios.")
@click.option("--trials", default=100_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write the sweep as CSV here.")
def simulate_collapse(k, g, sigma_sweep, trials, seed, out):
    """Monte Carlo estimate of summed-reward signal collapse."""
    from .advantage import (
        CollapseSimConfig,
        analytic_dominant_correlation,
        simulate_collapse as run_sim,
        write_sweep_csv,
    )

    try:
        sweep = tuple(float(s) for s in sigma_sweep.split(","))
    except ValueError as exc:
        raise click.UsageError(f"bad --sigma-sweep: {exc}") from exc
    config = CollapseSimConfig(k=k, g=g, sigma_dominant_sweep=sweep,
                               trials=trials, seed=seed)
    points = run_sim(config)
    click.echo(f"{'sigma_ratio':>12}{'mean_corr':>11}{'analytic':>10}{'stderr':>9}")
    for p in points:
        analytic = analytic_dominant_correlation(p.sigma_ratio, k)
        click.echo(f"{p.sigma_ratio:>12.3f}{p.mean_corr:>11.4f}"
                   f"{analytic:>10.4f}{p.stderr:>9.5f}")
    if out:
        write_sweep_csv(points, out)
        click.echo(f"wrote sweep to {out}")


if __name__ == "__main__":
    main()
