"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error. `run`
writes <out>/resolved.cfg, reports.jsonl, summary.csv, timings.csv, and
checkpoints/; every artifact embeds the resolved config hash and git-style
content hashes of binary inputs, and reruns of the same (config, seeds)
produce byte-identical reports.
"""

import json
import sys
from pathlib import Path

import click

from .engine import (
    config_from_dict,
    config_hash,
    config_to_dict,
    dump_config,
    evaluate as engine_evaluate,
    git_blob_sha1,
    load_config,
    prepare_seed_run,
    read_reports_jsonl,
    run_experiment,
    run_seed,
    save_checkpoint,
    write_reports_jsonl,
    write_summary_csv,
    write_timings_csv,
)
from .core.rng import Rng
from .data import gen_toy1, gen_toy2, gen_two_moons, save_dataset
from .errors import ConfigError, ParseError, UalearnError


@click.group()
def main():
    """Uncertainty-driven active learning workbench."""


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _apply_overrides(data, overrides):
    for item in overrides:
        if "=" not in item:
            _fail(2, f"override {item!r} must look like section.key=value")
        key, raw = item.split("=", 1)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = json.loads(raw) if raw and raw[0] in "[{0123456789tf-\"" else raw
    return data


def _input_hashes(cfg):
    hashes = {}
    if cfg.dataset.kind in ("csv", "uald") and cfg.dataset.path:
        try:
            hashes[cfg.dataset.path] = git_blob_sha1(Path(cfg.dataset.path).read_bytes())
        except OSError as exc:
            raise ConfigError(f"cannot hash dataset input: {exc}") from None
    return hashes


@main.command("gen-data")
@click.option("--kind", type=click.Choice(["toy1", "toy2", "two_moons"]), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--n-per-class", default=1000, show_default=True)
@click.option("--n", default=1000, show_default=True, help="two_moons sample count")
@click.option("--noise-std", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
def gen_data(kind, out, n_per_class, n, noise_std, seed):
    """Generate a toy dataset into a UALD container."""
    if kind == "toy1":
        ds = gen_toy1(n_per_class, seed)
    elif kind == "toy2":
        ds = gen_toy2(n_per_class, seed)
    else:
        ds = gen_two_moons(n, noise_std, seed)
    save_dataset(ds, out)
    click.echo(f"wrote {len(ds)} samples to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), default="runs/latest",
              show_default=True)
@click.option("--seed", "seed_override", type=int, multiple=True,
              help="replace the config seed list (repeatable)")
@click.option("--set", "overrides", multiple=True,
              help="override a config key, e.g. --set train.epochs=10")
def run(config_path, out_dir, seed_override, overrides):
    """Run the active-learning experiment with the simulated oracle."""
    import yaml

    try:
        with open(config_path) as fh:
            data = yaml.safe_load(fh) or {}
        data = _apply_overrides(data, overrides)
        if seed_override:
            data["seeds"] = list(seed_override)
        cfg = config_from_dict(data)
        input_hashes = _input_hashes(cfg)
    except (ConfigError, ParseError, yaml.YAMLError) as exc:
        _fail(2, str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "checkpoints").mkdir(exist_ok=True)
    provenance = {"config_hash": config_hash(cfg), "input_hashes": input_hashes}

    def checkpoint_cb(seed_run):
        path = out / "checkpoints" / f"seed{seed_run.seed}.uals"
        save_checkpoint(path, seed_run.state, seed_run.model,
                        meta={"seed": seed_run.seed, **provenance})

    try:
        reports, aggregate = run_experiment(cfg, checkpoint_cb=checkpoint_cb)
    except UalearnError as exc:
        _fail(1, str(exc))
    dump_config(cfg, out / "resolved.cfg", extra=provenance)
    write_reports_jsonl(out / "reports.jsonl", reports,
                        meta={**provenance, "config": config_to_dict(cfg)})
    write_summary_csv(out / "summary.csv", reports,
                      header_comments=[f"config_hash={provenance['config_hash']}",
                                       f"input_hashes={json.dumps(input_hashes, sort_keys=True)}"])
    write_timings_csv(out / "timings.csv", reports)
    with open(out / "aggregate.json", "w") as fh:
        json.dump({"provenance": provenance, "cycles": aggregate}, fh,
                  indent=2, sort_keys=True)
    click.echo(f"wrote {len(reports)} cycle reports to {out}")


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--m", "m_predict", default=32, show_default=True)
@click.option("--lam", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default="-")
def eval_cmd(model_path, data_path, m_predict, lam, seed, out_path):
    """Evaluate a checkpointed model on a UALD dataset."""
    from .data import load_dataset
    from .modelio import load_model

    try:
        model = load_model(model_path)
        ds = load_dataset(data_path)
    except UalearnError as exc:
        _fail(1, str(exc))
    record = engine_evaluate(model, ds, m_predict, lam, Rng(seed))
    record["model_hash"] = git_blob_sha1(Path(model_path).read_bytes())
    record["data_hash"] = git_blob_sha1(Path(data_path).read_bytes())
    text = json.dumps(record, indent=2, sort_keys=True)
    if out_path == "-":
        click.echo(text)
    else:
        Path(out_path).write_text(text + "\n")


@main.command()
@click.option("--reports", "report_dirs", type=click.Path(exists=True), multiple=True,
              required=True, help="run directory or reports.jsonl (repeatable)")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def export(report_dirs, fmt, out_dir):
    """Aggregate run reports into analysis tables.

    Emits not-confident-per-cycle-per-lambda and accuracy-vs-labeled-fraction
    tables, grouping input runs by their recorded lambda.
    """
    import numpy as np

    found = []
    for root in report_dirs:
        p = Path(root)
        paths = [p] if p.is_file() else sorted(p.rglob("reports.jsonl"))
        for path in paths:
            meta, reports = read_reports_jsonl(path)
            if not reports:
                continue
            lam = (meta or {}).get("config", {}).get("lambda_predict")
            found.append((lam, reports))
    if not found:
        _fail(2, "no reports.jsonl with cycle reports under the given paths")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    ncc_rows, acc_rows = [], []
    for lam, reports in found:
        by_cycle = {}
        for r in reports:
            by_cycle.setdefault(r.cycle_index, []).append(r)
        for cycle in sorted(by_cycle):
            group = by_cycle[cycle]
            ncc_rows.append({
                "lambda": lam, "cycle": cycle,
                "median_not_confident": float(np.median(
                    [r.not_confident_count for r in group])),
            })
            acc_rows.append({
                "lambda": lam, "cycle": cycle,
                "labeled_fraction": float(np.median(
                    [r.labeled_count / r.pool_size for r in group])),
                "median_accuracy": float(np.median([r.accuracy for r in group])),
            })

    if fmt == "json":
        (out / "not_confident.json").write_text(
            json.dumps(ncc_rows, indent=2, sort_keys=True) + "\n")
        (out / "accuracy_vs_labeled.json").write_text(
            json.dumps(acc_rows, indent=2, sort_keys=True) + "\n")
    else:
        _write_csv(out / "not_confident.csv",
                   ["lambda", "cycle", "median_not_confident"], ncc_rows)
        _write_csv(out / "accuracy_vs_labeled.csv",
                   ["lambda", "cycle", "labeled_fraction", "median_accuracy"], acc_rows)
    click.echo(f"exported {len(found)} run(s) to {out}")


def _write_csv(path, cols, rows):
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in cols))
    path.write_text("\n".join(lines) + "\n")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--port", default=8081, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="runs/serve",
              show_default=True)
@click.option("--restore", "restore_path", type=click.Path(exists=True),
              help="resume from a UALS checkpoint")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="static frontend bundle to serve at /ui")
def serve(config_path, port, host, out_dir, restore_path, ui_dir):
    """Serve the annotation service with a human oracle."""
    import uvicorn

    from .engine.checkpoint import restore_checkpoint
    from .service import Session, create_app

    try:
        cfg = load_config(config_path)
    except (ConfigError, ParseError) as exc:
        _fail(2, str(exc))
    if cfg.oracle != "human":
        _fail(2, "serve needs a config with oracle: human")
    out = Path(out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    default_ui = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    app = create_app(ui_dir=ui_dir or (default_ui if default_ui.exists() else None))

    state = model = None
    if restore_path:
        try:
            state, model, _meta = restore_checkpoint(restore_path)
        except UalearnError as exc:
            _fail(1, str(exc))
    session = Session(session_id="primary", config=cfg)
    app.state.sessions[session.session_id] = session
    session.start(initial_state=state, initial_model=model)

    @app.on_event("shutdown")
    def persist_sessions():
        for sid, sess in app.state.sessions.items():
            blob = sess.checkpoint_blob()
            if blob:
                (out / "checkpoints" / f"{sid}.uals").write_bytes(blob)
            sess.shutdown()

    click.echo(f"annotation service on http://{host}:{port} (session: primary)")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        _fail(1, f"cannot bind {host}:{port}: {exc}")


if __name__ == "__main__":
    main()
