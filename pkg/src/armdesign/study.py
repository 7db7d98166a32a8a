"""End-to-end design search: config -> optimizer loop -> JSON-lines trial log.

The trial log starts with a header line carrying the full config and its
hash, followed by one line per trial::

    {"kind": "trial_log", "config": {...}, "config_hash": "...", "created": "..."}
    {"id": 0, "raw_joints": ["Y","Y",...], "joints": ["Y","P",...], "lengths": [...],
     "e_reach": 12.3, "e_torque": 150.2, "failed": false,
     "front_rank_at_end": null, "wall_ms": 812.5}

Trials are appended and flushed as they finish.  When a run completes the
file is rewritten once (atomically) to fill in ``front_rank_at_end``.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from pathlib import Path
from typing import Callable

import numpy as np

from .chain_model import JOINT_CHOICES, DesignGenome, GenomeError, JointType
from .config import RunConfig, config_from_dict
from .motpe import DesignSpace, ParetoArchive, Trial, run_optimization
from .pareto import front_ranks
from .workspace import WorkspaceEvaluator

# Family colors per arm size; the same family may get a different color.
FAMILY_COLORS = {
    6: {"PRRY": "magenta", "RPYP": "red", "YPRY": "blue", "RPPY": "cyan",
        "YPPY": "green", "YPPP": "orange"},
    7: {"PRRY": "magenta", "YPRR": "cyan", "YPRY": "blue", "YPPP": "orange",
        "YPPY": "green", "YPYP": "red", "YPRP": "lime"},
}
OTHER_COLOR = "lightgray"


def classify_family(genome: DesignGenome | str) -> str:
    """First four joint letters of a (canonical) genome, e.g. ``"PRRY"``."""
    code = genome if isinstance(genome, str) else genome.code
    if len(code) < 4:
        raise GenomeError(f"families need at least 4 joints, got {len(code)}")
    return code[:4]


def family_colors(n_joint: int) -> dict[str, str]:
    return dict(FAMILY_COLORS.get(n_joint, FAMILY_COLORS[6]))


def design_space(cfg: RunConfig) -> DesignSpace:
    return DesignSpace(cfg.n_joint, cfg.length)


def trial_genome(trial: Trial, space: DesignSpace) -> DesignGenome:
    return space.decode(trial.choices, trial.params)


# --- log I/O ----------------------------------------------------------------

def trial_record(trial: Trial, space: DesignSpace, rank: int | None = None) -> dict:
    genome = trial_genome(trial, space)
    return {
        "id": trial.id,
        "raw_joints": [JOINT_CHOICES[c].value for c in trial.raw_choices],
        "joints": [j.value for j in genome.joints],
        "lengths": list(genome.lengths),
        "e_reach": -trial.objectives[0],
        "e_torque": trial.objectives[1],
        "failed": trial.failed,
        "front_rank_at_end": rank,
        "wall_ms": round(trial.wall_ms, 3),
    }


def trial_from_record(rec: dict) -> Trial:
    raw = tuple(JOINT_CHOICES.index(JointType.parse(j)) for j in rec["raw_joints"])
    choices = tuple(JOINT_CHOICES.index(JointType.parse(j)) for j in rec["joints"])
    return Trial(
        id=int(rec["id"]),
        raw_choices=raw,
        choices=choices,
        params=tuple(float(v) for v in rec["lengths"][:-1]),
        objectives=(-float(rec["e_reach"]), float(rec["e_torque"])),
        failed=bool(rec.get("failed", False)),
        wall_ms=float(rec.get("wall_ms", 0.0)),
    )


def log_header(cfg: RunConfig) -> dict:
    return {
        "kind": "trial_log",
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def read_trial_log(path) -> tuple[dict, list[Trial]]:
    """Parse a trial log, ignoring a partially written last line."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty trial log")
    header = json.loads(lines[0])
    if header.get("kind") != "trial_log":
        raise ValueError(f"{path}: not a trial log")
    trials = []
    for k, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            if k == len(lines) - 1:
                break
            raise ValueError(f"{path}:{k + 1}: malformed trial record") from None
        trials.append(trial_from_record(rec))
    for i, t in enumerate(trials):
        if t.id != i:
            raise ValueError(f"{path}: trial ids must be consecutive from 0 (got {t.id} at {i})")
    return header, trials


def config_from_header(header: dict) -> RunConfig:
    return config_from_dict(header["config"])


def load_archive(path) -> tuple[RunConfig, ParetoArchive]:
    header, trials = read_trial_log(path)
    return config_from_header(header), ParetoArchive(trials)


class TrialLogWriter:
    """Append-only writer; one flushed line per trial."""

    def __init__(self, path, cfg: RunConfig, space: DesignSpace, resume_trials: list[Trial] | None = None,
                 header: dict | None = None):
        self.path = Path(path)
        self.space = space
        self.header = header or log_header(cfg)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w") as fh:
            fh.write(json.dumps(self.header) + "\n")
            for t in resume_trials or []:
                fh.write(json.dumps(trial_record(t, space)) + "\n")
        self._fh = open(self.path, "a")

    def append(self, trial: Trial) -> None:
        self._fh.write(json.dumps(trial_record(trial, self.space)) + "\n")
        self._fh.flush()

    def finalize(self, archive: ParetoArchive) -> None:
        self._fh.close()
        ranks = front_ranks(archive.objectives) if len(archive) else []
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w") as fh:
            fh.write(json.dumps(self.header) + "\n")
            for t, r in zip(archive.trials, ranks):
                fh.write(json.dumps(trial_record(t, self.space, int(r))) + "\n")
        os.replace(tmp, self.path)

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


# --- running ----------------------------------------------------------------

def make_objective(cfg: RunConfig, evaluator: WorkspaceEvaluator | None = None) -> Callable:
    evaluator = evaluator or WorkspaceEvaluator(cfg.workspace, cfg.ik, cfg.n_joint, cfg.n_workers)

    def objective(genome: DesignGenome) -> tuple[float, float]:
        return evaluator.evaluate(genome, cfg.mass, cfg.joint_limit, cfg.empty_torque).objectives

    return objective


def run_study(
    cfg: RunConfig,
    log_path=None,
    resume: bool = False,
    on_trial: Callable[[Trial, ParetoArchive], None] | None = None,
    objective: Callable | None = None,
) -> ParetoArchive:
    """Run (or resume) the design search described by ``cfg``.

    With ``resume=True`` and an existing log whose config hash matches, the
    logged trials are kept and the search continues at the next trial id.
    """
    space = design_space(cfg)
    history: list[Trial] = []
    header = None
    if resume and log_path is not None and Path(log_path).exists():
        header, history = read_trial_log(log_path)
        if header.get("config_hash") != cfg.hash():
            raise ValueError(f"{log_path}: config differs from the logged run, cannot resume")
    writer = TrialLogWriter(log_path, cfg, space, history, header) if log_path is not None else None
    objective = objective or make_objective(cfg)

    def record(trial: Trial, archive: ParetoArchive) -> None:
        if writer is not None:
            writer.append(trial)
        if on_trial is not None:
            on_trial(trial, archive)

    try:
        archive = run_optimization(objective, space, cfg.motpe, history, record)
    except BaseException:
        if writer is not None:
            writer.close()
        raise
    if writer is not None:
        writer.finalize(archive)
    return archive


def comparable_log_lines(path) -> list[dict]:
    """Log records with run-time-only fields removed, for reproducibility checks."""
    out = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            rec.pop("created", None)
            rec.pop("wall_ms", None)
            out.append(rec)
    return out


def genome_lengths_ratio(genome: DesignGenome) -> np.ndarray:
    lengths = np.asarray(genome.lengths)
    return lengths / lengths.sum()
