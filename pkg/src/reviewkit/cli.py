"""Command-line entry points.

``serve`` runs the HTTP service; the other subcommands operate on the
same data directory (or run pure computations like ``lint`` and ``ueq``)
so a review store can be driven entirely from scripts.
"""

from __future__ import annotations

import json
import sys

import click

from .changes import change_metrics
from .comments import lint_comment
from .service.config import load_config
from .service.core import ReviewService, replay_events
from .service.events import EventLog
from .ueq import (
    UEQItemMap,
    analyze_groups,
    format_table,
    load_item_map,
    responses_from_csv,
    responses_from_json,
    thresholds_from_json,
)


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Path to the JSON config file.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Code-review support service: guides, comment lint, expert routing."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = load_config(config_path)


def _service(ctx: click.Context) -> ReviewService:
    return ReviewService(ctx.obj["config"], persist=True)


@main.command()
@click.option("--host", default=None, help="Bind address (overrides config).")
@click.option("--port", default=None, type=int, help="Port (overrides config).")
@click.pass_context
def serve(ctx: click.Context, host: str | None, port: int | None):
    """Run the HTTP service."""
    import uvicorn

    from .service.api import create_app

    config = ctx.obj["config"]
    app = create_app(ReviewService(config, persist=True))
    uvicorn.run(
        app,
        host=host or config.host,
        port=port or config.port,
        log_level="info",
    )


@main.command("import-diff")
@click.argument("diff_file", type=click.File("r"))
@click.option("--author", required=True, help="Author id of the change.")
@click.option("--title", default="", help="Change title.")
@click.option("--repo", default="", help="Repository id.")
@click.option("--change-id", default=None, help="Explicit change id.")
@click.option(
    "--anchors",
    "anchors_file",
    type=click.File("r"),
    default=None,
    help="JSON list of guide anchors ({file_path, hunk_index, explanation}).",
)
@click.pass_context
def import_diff(ctx, diff_file, author, title, repo, change_id, anchors_file):
    """Create a change request from a unified diff."""
    anchors = json.load(anchors_file) if anchors_file else None
    service = _service(ctx)
    change = service.create_change(
        repo_id=repo,
        author_id=author,
        title=title,
        diff_text=diff_file.read(),
        anchors=anchors,
        change_id=change_id,
    )
    metrics = change_metrics(change)
    click.echo(f"created change {change.id}")
    click.echo(
        f"files: {metrics.files}  hunks: {metrics.hunks}  "
        f"+{metrics.added_lines} -{metrics.deleted_lines}"
    )
    if change.anchors:
        click.echo(f"guide anchors: {len(change.anchors)}")


@main.command("import-history")
@click.argument("commits_file", type=click.File("r"))
@click.pass_context
def import_history_cmd(ctx, commits_file):
    """Import commit history records (JSON list) for expertise ranking."""
    records = json.load(commits_file)
    service = _service(ctx)
    history = service.import_commits(records)
    click.echo(
        f"history now holds {len(history)} commits from "
        f"{len(history.authors())} authors"
    )


@main.command()
@click.argument("comment_file", type=click.File("r"), default="-")
@click.option(
    "--strict", is_flag=True, help="Exit non-zero when errors are found."
)
@click.pass_context
def lint(ctx, comment_file, strict):
    """Lint a structured review comment from a file or stdin."""
    config = ctx.obj["config"]
    report = lint_comment(
        comment_file.read(), patterns=config.destructive_patterns
    )
    for finding in report.findings:
        click.echo(
            f"{finding.rule_id} [{finding.severity}] {finding.message}"
        )
    click.echo("passed" if report.passed else "failed")
    if strict and not report.passed:
        sys.exit(1)


@main.command()
@click.argument("change_id")
@click.option("-k", default=5, type=int, help="How many reviewers to list.")
@click.pass_context
def experts(ctx, change_id, k):
    """Rank candidate reviewers for a change by path expertise."""
    service = _service(ctx)
    for reviewer_id, score in service.rank_experts(change_id, k=k):
        click.echo(f"{reviewer_id}\t{score:.6f}")


@main.command()
@click.argument("change_id")
@click.pass_context
def assign(ctx, change_id):
    """Assign a change to the best schedulable reviewer."""
    service = _service(ctx)
    assignment = service.assign_change(change_id)
    if assignment.immediate:
        click.echo(f"assigned {change_id} to {assignment.reviewer_id} (immediate)")
    else:
        start, end = assignment.scheduled_slot
        click.echo(
            f"assigned {change_id} to {assignment.reviewer_id} "
            f"(deferred slot {start.isoformat()} .. {end.isoformat()})"
        )


@main.command()
@click.argument("responses_file", type=click.File("r"))
@click.option("--csv", "is_csv", is_flag=True, help="Input is CSV, not JSON.")
@click.option(
    "--item-map",
    "item_map_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Custom item map JSON (defaults to the packaged 26-item map).",
)
@click.option(
    "--thresholds",
    "thresholds_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Benchmark cut points JSON for category classification.",
)
@click.option("--json", "as_json", is_flag=True, help="Emit JSON, not a table.")
def ueq(responses_file, is_csv, item_map_path, thresholds_path, as_json):
    """Score questionnaire responses into the six UEQ scales."""
    text = responses_file.read()
    if is_csv:
        groups = {"all": responses_from_csv(text)}
    else:
        data = json.loads(text)
        if isinstance(data, dict):
            groups = {
                name: responses_from_json(items) for name, items in data.items()
            }
        else:
            groups = {"all": responses_from_json(data)}
    item_map: UEQItemMap = load_item_map(item_map_path)
    thresholds = None
    if thresholds_path:
        with open(thresholds_path, "r", encoding="utf-8") as handle:
            thresholds = thresholds_from_json(json.load(handle))
    results = analyze_groups(groups, item_map, thresholds)
    if as_json:
        body = {
            name: [r.to_dict() for r in scale_results]
            for name, scale_results in results.items()
        }
        click.echo(json.dumps(body, indent=2))
    else:
        click.echo(format_table(results), nl=False)


@main.command("replay-check")
@click.pass_context
def replay_check(ctx):
    """Verify the event log replays to the live (snapshot + tail) state."""
    config = ctx.obj["config"]
    service = ReviewService(config, persist=True)
    log = EventLog(config.data_dir)
    replayed = replay_events(log.read_all(), config)
    if replayed.fingerprint() == service.state.fingerprint():
        click.echo("replay ok: log reconstructs live state")
    else:
        click.echo("replay mismatch: log does not reconstruct live state")
        sys.exit(1)


if __name__ == "__main__":
    main()
