"""Command line entry point.

Exit codes: 0 success, 2 invalid input (config, genome, file contents),
3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import plots
from .chain_model import DesignGenome, GenomeError, chain_from_urdf, expand_genome, export_urdf
from .config import ConfigError, RunConfig, load_config
from .motpe import ParetoArchive
from .report import render_markdown, report
from .study import (
    config_from_header,
    design_space,
    family_colors,
    load_archive,
    read_trial_log,
    run_study,
    trial_record,
)
from .workspace import WorkspaceEvaluator, read_voxel_map, write_voxel_map

log = logging.getLogger("armdesign")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


def _load_genome(path, cfg: RunConfig | None = None) -> DesignGenome:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GenomeError(f"{path}: not valid JSON ({exc})") from None
    genome = DesignGenome.from_json(obj)
    if cfg is not None:
        if genome.n_joint != cfg.n_joint:
            raise GenomeError(f"{path}: genome has {genome.n_joint} joints, config expects {cfg.n_joint}")
        genome.check_budget(cfg.length)
    return genome


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def cmd_optimize(args) -> int:
    overrides = {"n_joint": args.n_joint} if args.n_joint is not None else {}
    if args.seed is not None:
        overrides["motpe"] = {"seed": args.seed}
    if args.n_total is not None:
        overrides.setdefault("motpe", {})["n_total"] = args.n_total
    if args.out is not None:
        overrides["output_dir"] = args.out
    cfg = load_config(args.config, preset=args.preset, overrides=overrides)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "trials.jsonl"
    every = max(1, cfg.motpe.n_total // 100)

    def progress(trial, archive):
        if (trial.id + 1) % every == 0:
            log.info("trial %d/%d  front=%d", trial.id + 1, cfg.motpe.n_total, len(archive.front))

    archive = run_study(cfg, log_path, resume=args.resume, on_trial=progress)
    plots.emit_pareto_plot(archive, family_colors(cfg.n_joint), out / "pareto.svg", cfg.hash(),
                           title=f"{cfg.n_joint}-DOF design search")
    _write(out / "report.md", render_markdown(report(archive, cfg.length.total), cfg.hash()))
    print(f"{len(archive)} trials, {len(archive.front)} on the Pareto front -> {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, preset=args.preset)
    genome = _load_genome(args.genome, cfg)
    evaluator = WorkspaceEvaluator(cfg.workspace, cfg.ik, cfg.n_joint, cfg.n_workers)
    score = evaluator.evaluate(genome, cfg.mass, cfg.joint_limit, cfg.empty_torque)
    header = {"config_hash": cfg.hash(), "genome": genome.to_json(),
              "e_reach": score.e_reach_total, "e_torque": score.e_torque_total}
    if args.out:
        write_voxel_map(args.out, score, header)
    print(json.dumps({"e_reach": score.e_reach_total, "e_torque": score.e_torque_total}))
    return EXIT_OK


def cmd_export_urdf(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    genome = _load_genome(args.genome)
    chain = expand_genome(genome, cfg.mass, cfg.joint_limit)
    xml = export_urdf(chain, name=genome.code, comment=f"config_hash={cfg.hash()}")
    chain_from_urdf(xml)  # parse check
    _write(args.out, xml)
    return EXIT_OK


def cmd_pareto(args) -> int:
    cfg, archive = load_archive(args.trial_log)
    space = design_space(cfg)
    lines = [json.dumps({"kind": "pareto_front", "config_hash": cfg.hash(), "n_trials": len(archive)})]
    lines += [json.dumps(trial_record(archive.trials[k], space, rank=0)) for k in sorted(archive.front)]
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_plot(args) -> int:
    with open(args.input) as fh:
        head = json.loads(fh.readline())
    kind = head.get("kind")
    if kind == "trial_log":
        cfg, archive = load_archive(args.input)
        svg = plots.emit_pareto_plot(archive, family_colors(cfg.n_joint), None, cfg.hash(),
                                     title=f"{cfg.n_joint}-DOF design search")
    elif kind == "voxel_map":
        header, score = read_voxel_map(args.input)
        svg = plots.emit_voxel_map(score, args.mode, None, header.get("config_hash"))
    else:
        raise ValueError(f"{args.input}: unrecognized file kind {kind!r}")
    _write(args.out, svg)
    return EXIT_OK


def cmd_report(args) -> int:
    header, trials = read_trial_log(args.trial_log)
    cfg, archive = config_from_header(header), ParetoArchive(trials)
    summary = report(archive, cfg.length.total)
    text = json.dumps(summary, indent=2) + "\n" if args.json else render_markdown(summary, header.get("config_hash"))
    _write(args.out, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="armdesign", description="Manipulator structure search")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run the design search")
    p.add_argument("config", nargs="?", help="YAML config (defaults if omitted)")
    p.add_argument("--n-joint", type=int)
    p.add_argument("--preset", choices=["desk"])
    p.add_argument("--seed", type=int)
    p.add_argument("--n-total", type=int)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--resume", action="store_true", help="continue an existing trial log")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="score one genome")
    p.add_argument("genome")
    p.add_argument("config", nargs="?")
    p.add_argument("--preset", choices=["desk"])
    p.add_argument("-o", "--out", help="voxel map output (JSON lines)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-urdf", help="write the URDF of a genome")
    p.add_argument("genome")
    p.add_argument("--config")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_export_urdf)

    p = sub.add_parser("pareto", help="list Pareto-optimal trials")
    p.add_argument("trial_log")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("plot", help="SVG of a trial log or a voxel map")
    p.add_argument("input")
    p.add_argument("--mode", choices=["reach", "torque"], default="reach")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("report", help="per-family summary of a trial log")
    p.add_argument("trial_log")
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GenomeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
