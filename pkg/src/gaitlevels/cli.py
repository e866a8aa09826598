"""Command-line entry point: ``gaitlevels <subcommand> --input data.csv --out results/``.

Each run computes everything in memory and writes its files only on success,
together with ``run_manifest.json``; ``gaitlevels replay`` re-executes a
manifest and checks the output hashes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, pipeline, report, synth
from .config import RunConfig, from_keys, load_config
from .dissociation import trustworthiness
from .errors import ConfigError, GaitLevelsError, KTooLarge
from .ingest import read_dataset, serialize_dataset

log = logging.getLogger("gaitlevels")

MANIFEST = "run_manifest.json"
DEFAULT_OUT = "gaitlevels_out"
SCENARIO_SEEDS = {"table1": 3, "dissociation": 7, "iid": 0, "point-mass": 0}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _versions() -> dict[str, str]:
    import numba
    import numpy
    import scipy
    import sklearn

    return {
        "gaitlevels": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "numba": numba.__version__,
    }


def _load(args):
    path = Path(args["input"])
    if not path.is_file():
        raise ConfigError(f"input file not found: {path}")
    return read_dataset(path)


def _trust(m, emb, k):
    try:
        return trustworthiness(m, emb, k)
    except KTooLarge:
        return float("nan")


# --- subcommands: each returns {filename: text} and a one-line summary -------


def cmd_ingest(args, cfg):
    ds = _load(args)
    prep = pipeline.prepare(ds, cfg)
    kept = prep.dataset
    outputs = {"observations.csv": serialize_dataset(kept)}
    return outputs, f"{len(ds)} rows read, {len(kept)} linear-phase rows kept"


def cmd_score(args, cfg):
    prep = pipeline.prepare(_load(args), cfg)
    tables = pipeline.score_tables(prep, cfg)
    outputs = {
        "scores.csv": report.scores_csv(tables.records),
        "summary.csv": report.summary_csv(tables.summaries, tables.deltas),
        "preprocess_audit.json": report.dump_json(prep.audit.as_dict()),
    }
    return outputs, f"scored {len(tables.records)} observations in {len(tables.summaries)} cells"


def cmd_dynamics(args, cfg):
    prep = pipeline.prepare(_load(args), cfg)
    cells = pipeline.dynamics_table(prep)
    return {"dynamics.csv": report.dynamics_csv(cells)}, f"dispersion for {len(cells)} cells"


def _embed_outputs(prep, cfg, session):
    emb = pipeline.embed_session(prep, cfg, session)
    m = prep.matrix if session == "both" else prep.matrix.subset(prep.matrix.sessions == session)
    trust = _trust(m, emb, cfg.trust_k)
    meta = emb.describe()
    meta["trustworthiness_k"] = cfg.trust_k
    meta["trustworthiness"] = report._num(trust, report.DIAG_DP)
    outputs = {
        "embedding.csv": report.embedding_csv(emb),
        "embedding.svg": report.embedding_svg(emb),
        "embedding_meta.json": report.dump_json(meta),
    }
    return outputs, emb, trust


def cmd_embed(args, cfg):
    prep = pipeline.prepare(_load(args), cfg)
    outputs, emb, trust = _embed_outputs(prep, cfg, args["session"])
    return outputs, f"embedded {emb.n} observations (trustworthiness {report.fmt(trust, 4)})"


def cmd_dissociate(args, cfg):
    prep = pipeline.prepare(_load(args), cfg)
    reports, _ = pipeline.dissociate(prep, cfg, args["session"])
    payload = report.dissociation_payload(reports)
    n_flagged = sum(p["flagged"] for p in payload)
    return {"dissociation.json": report.dump_json(payload)}, f"{n_flagged} of {len(payload)} pairs flagged"


def cmd_stability(args, cfg):
    prep = pipeline.prepare(_load(args), cfg)
    seeds = args.get("seeds") or list(cfg.seeds)
    rep = pipeline.stability(prep, cfg, args["session"], seeds)
    summary = f"mean ARI {report.fmt(rep.mean_ari, 4)}, mean disparity {report.fmt(rep.mean_disparity, 4)}"
    return {"stability.json": report.dump_json(report.stability_payload(rep))}, summary


def cmd_synth(args, cfg):
    scenario = args["scenario"]
    seed = args.get("seed")
    seed = SCENARIO_SEEDS.get(scenario, 0) if seed is None else seed
    n = args.get("n")
    outputs = {}
    if args.get("spec"):
        spec = synth.GeneratorSpec.load(args["spec"])
        if args.get("seed") is not None:
            spec = synth.GeneratorSpec(spec.cells, seed)
        ds = synth.generate_calibrated(spec)
    elif scenario == "table1":
        spec = synth.table1_spec(n=n or 500, seed=seed)
        ds = synth.generate_calibrated(spec)
        outputs["generator_spec.json"] = spec.to_json() + "\n"
    elif scenario == "dissociation":
        ds = synth.dissociation_scenario(seed=seed, n=n or 300)
    elif scenario == "iid":
        ds = synth.iid_scenario(seed=seed, n=n or 150)
    elif scenario == "point-mass":
        ds = synth.point_mass_table1(n=n or 3)
    else:
        raise ConfigError(f"unknown scenario {scenario!r}")
    outputs["synthetic.csv"] = serialize_dataset(ds)
    return outputs, f"wrote {len(ds)} synthetic observations ({ds.provenance})"


def cmd_report(args, cfg):
    ds = _load(args)
    prep = pipeline.prepare(ds, cfg)
    tables = pipeline.score_tables(prep, cfg)
    cells = pipeline.dynamics_table(prep)
    outputs, emb, trust = _embed_outputs(prep, cfg, args["session"])
    reports, _ = pipeline.dissociate(prep, cfg, args["session"])
    stab = None
    if args.get("seeds"):
        stab = pipeline.stability(prep, cfg, args["session"], args["seeds"])
        outputs["stability.json"] = report.dump_json(report.stability_payload(stab))
    sess_key = ",".join(s for s in ("M1", "M2") if s in set(emb.sessions))
    outputs.update(
        {
            "scores.csv": report.scores_csv(tables.records),
            "summary.csv": report.summary_csv(tables.summaries, tables.deltas),
            "preprocess_audit.json": report.dump_json(prep.audit.as_dict()),
            "dynamics.csv": report.dynamics_csv(cells),
            "dissociation.json": report.dump_json(report.dissociation_payload(reports)),
        }
    )
    outputs["report.md"] = report.report_markdown(
        source=args["input"],
        n_rows=len(prep.dataset),
        audit=prep.audit.as_dict(),
        summaries=tables.summaries,
        deltas=tables.deltas,
        raw_mode=tables.raw_mode,
        dynamics=cells,
        embeddings=[emb],
        trust={sess_key: trust},
        dissociation=reports,
        stability=stab,
    )
    n_flagged = sum(len(r.flagged) for r in reports)
    return outputs, f"report written ({n_flagged} flagged pair(s))"


COMMANDS = {
    "ingest": cmd_ingest,
    "score": cmd_score,
    "dynamics": cmd_dynamics,
    "embed": cmd_embed,
    "dissociate": cmd_dissociate,
    "stability": cmd_stability,
    "synth": cmd_synth,
    "report": cmd_report,
}

# args recorded in the manifest (and accepted back by replay)
RECORDED_ARGS = ("input", "session", "seed", "seeds", "raw_scores", "scenario", "n", "spec")


def _write_outputs(out_dir: Path, outputs: dict[str, str]) -> None:
    """Write every file or none: anything written before a failure is removed."""
    created_dir = not out_dir.exists()
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in outputs.items():
            path = out_dir / name
            path.write_bytes(text.encode("utf-8"))
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        if created_dir and out_dir.exists() and not any(out_dir.iterdir()):
            out_dir.rmdir()
        raise


def execute(command: str, args: dict, cfg: RunConfig, out_dir: Path) -> tuple[dict[str, str], str]:
    """Run one subcommand and write its outputs plus the manifest."""
    outputs, summary = COMMANDS[command](args, cfg)
    recorded = {k: args.get(k) for k in RECORDED_ARGS if args.get(k) is not None}
    manifest = {
        "tool": "gaitlevels",
        "command": command,
        "args": recorded,
        "config": cfg.as_keys(),
        "input_sha256": _sha256(Path(args["input"]).read_bytes()) if args.get("input") else None,
        "outputs": {name: _sha256(text.encode("utf-8")) for name, text in sorted(outputs.items())},
        "versions": _versions(),
    }
    outputs[MANIFEST] = report.dump_json(manifest)
    _write_outputs(out_dir, outputs)
    return outputs, summary


def replay(manifest_path: Path, out_dir: Path) -> tuple[list[str], str]:
    """Re-run a manifest; returns the names of outputs whose hash differs."""
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        command, args, keys = manifest["command"], dict(manifest["args"]), manifest["config"]
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"malformed manifest {manifest_path}: {exc}") from None
    if command not in COMMANDS:
        raise ConfigError(f"manifest names unknown command {command!r}")
    if args.get("input"):
        path = Path(args["input"])
        if not path.is_file():
            raise ConfigError(f"manifest input not found: {path}")
        if manifest.get("input_sha256") and _sha256(path.read_bytes()) != manifest["input_sha256"]:
            raise ConfigError(f"input {path} changed since the manifest was written (sha256 mismatch)")
    if command != "synth":
        args.setdefault("session", "both")
    outputs, summary = execute(command, args, from_keys(keys), out_dir)
    expected = manifest.get("outputs", {})
    mismatched = [
        name for name, digest in expected.items() if _sha256(outputs.get(name, "").encode("utf-8")) != digest
    ]
    return mismatched, summary


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seeds expects comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("--seeds needs at least one seed")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitlevels", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gaitlevels {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: $GAITLEVELS_OUT or ./gaitlevels_out)")
    common.add_argument("--config", help="flat 'section.key = value' config file")
    common.add_argument("--seed", type=int, help="random seed (overrides config 'seed')")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True, help="gait CSV file")
    data.add_argument("--session", choices=("M1", "M2", "both"), default="both")
    data.add_argument("--raw-scores", action="store_true", help="score raw features instead of preprocessed ones")

    helps = {
        "ingest": "validate a CSV and keep linear-phase rows",
        "score": "Level 1 score tables (scores.csv, summary.csv)",
        "dynamics": "Level 2 dispersion table (dynamics.csv)",
        "embed": "Level 3 embedding (embedding.csv, embedding.svg)",
        "dissociate": "score-similar / latent-separated pairs (dissociation.json)",
        "stability": "embedding stability across seeds (stability.json)",
        "report": "run all levels and write report.md",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common, data], help=text)
        if name in ("stability", "report"):
            p.add_argument("--seeds", type=_seed_list, help="comma-separated seeds, e.g. 1,2,3")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset in the input CSV schema")
    p.add_argument("--scenario", choices=tuple(SCENARIO_SEEDS), default="dissociation")
    p.add_argument("--n", type=int, help="observations per cell")
    p.add_argument("--spec", help="generator spec JSON (overrides --scenario)")

    p = sub.add_parser("replay", help="re-run a run_manifest.json and verify output hashes")
    p.add_argument("manifest")
    p.add_argument("--out", help="output directory for the re-run")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out_dir = Path(ns.out or os.environ.get("GAITLEVELS_OUT") or DEFAULT_OUT)

    try:
        if ns.command == "replay":
            mismatched, summary = replay(Path(ns.manifest), out_dir)
            if mismatched:
                print(f"replay differs from manifest in: {', '.join(mismatched)}", file=sys.stderr)
                return 1
            print(f"{summary}; outputs identical to manifest -> {out_dir}")
            return 0

        cfg = load_config(ns.config)
        if ns.seed is not None:
            cfg = cfg.replace(seed=ns.seed)
        if getattr(ns, "raw_scores", False):
            cfg = cfg.replace(raw_scores=True)
        args = {k: v for k, v in vars(ns).items() if k in RECORDED_ARGS}
        args["raw_scores"] = cfg.raw_scores if ns.command != "synth" else None
        _, summary = execute(ns.command, args, cfg, out_dir)
    except (GaitLevelsError, OSError) as exc:
        print(f"gaitlevels {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    print(f"{summary} -> {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
