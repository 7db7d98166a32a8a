"""Workspace voxelization and the reachability / torque objectives.

Every voxel gets ``n_rand`` end-effector orientations at its center.  A
voxel's reachability is the fraction of those poses the arm can reach; its
torque score is the mean gravity-torque norm over the reached poses.  Pose
sets and IK restart draws depend only on the workspace and IK settings, so
every design is scored against the same targets.
"""

from __future__ import annotations

import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .chain_model import DEFAULT_JOINT_LIMIT, DesignGenome, KinematicChain, MassParams, expand_genome
from .kinematics import IkConfig, Pose, fk_batch, solve_ik_batch
from .statics import gravity_torque_from


@dataclass(frozen=True)
class WorkspaceSpec:
    x_min: float = -0.5
    x_max: float = 0.5
    y_min: float = -0.5
    y_max: float = 0.5
    z_min: float = -0.1
    z_max: float = 0.5
    d_voxel: float = 0.2
    n_rand: int = 30
    pose_seed: int = 0

    def __post_init__(self):
        for ax in "xyz":
            if not getattr(self, f"{ax}_max") > getattr(self, f"{ax}_min"):
                raise ValueError(f"{ax}_max must exceed {ax}_min")
        if not self.d_voxel > 0:
            raise ValueError("d_voxel must be positive")
        if self.n_rand < 1:
            raise ValueError("n_rand must be >= 1")

    def axis_counts(self) -> tuple[int, int, int]:
        return tuple(
            int(math.floor((getattr(self, f"{ax}_max") - getattr(self, f"{ax}_min")) / self.d_voxel + 1e-9))
            for ax in "xyz"
        )


@dataclass(frozen=True)
class VoxelScore:
    center: tuple[float, float, float]
    e_reach: float
    e_torque: float | None
    successes: int

    def to_json(self) -> dict:
        return {"center": list(self.center), "e_reach": self.e_reach,
                "e_torque": self.e_torque, "successes": self.successes}

    @classmethod
    def from_json(cls, obj: dict) -> "VoxelScore":
        return cls(tuple(obj["center"]), obj["e_reach"], obj["e_torque"], obj["successes"])


@dataclass(frozen=True)
class DesignScore:
    e_reach_total: float
    e_torque_total: float
    per_voxel: tuple[VoxelScore, ...]

    @property
    def objectives(self) -> tuple[float, float]:
        """Both minimized: (-reach, torque)."""
        return (-self.e_reach_total, self.e_torque_total)


def build_voxel_grid(spec: WorkspaceSpec) -> np.ndarray:
    """Voxel centers, shape (V, 3), x varying fastest."""
    counts = spec.axis_counts()
    if min(counts) < 1:
        raise ValueError(f"workspace yields no voxels along some axis: counts={counts}")
    axes = [
        getattr(spec, f"{ax}_min") + spec.d_voxel * (np.arange(n) + 0.5)
        for ax, n in zip("xyz", counts)
    ]
    zz, yy, xx = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    return np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1)


def _orientations(n_rand: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return Rotation.random(n_rand, random_state=rng).as_quat().reshape(n_rand, 4)


def sample_poses(center, n_rand: int, seed) -> list[Pose]:
    """``n_rand`` poses at ``center`` with orientations uniform over SO(3)."""
    if n_rand < 1:
        raise ValueError("n_rand must be >= 1")
    center = np.asarray(center, dtype=float)
    return [Pose(center.copy(), quat) for quat in _orientations(n_rand, seed)]


def _score_results(chain: KinematicChain, success: np.ndarray, q: np.ndarray):
    """Per-target torque norms (nan where IK failed)."""
    norms = np.full(success.shape, np.nan)
    if success.any():
        origins, z_world, _, _ = fk_batch(chain, q[success])
        tau = gravity_torque_from(chain, origins, z_world)
        norms[success] = np.linalg.norm(tau, axis=1)
    return norms


def _voxel_score(center, success: np.ndarray, norms: np.ndarray) -> VoxelScore:
    n_ok = int(success.sum())
    e_torque = float(norms[success].mean()) if n_ok else None
    return VoxelScore(tuple(float(v) for v in center), n_ok / success.size, e_torque, n_ok)


def evaluate_voxel(chain: KinematicChain, poses: list[Pose], ik_cfg: IkConfig = IkConfig(), rng=None) -> VoxelScore:
    """Score one voxel from its list of target poses (all at the voxel center)."""
    if not poses:
        raise ValueError("need at least one pose")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(ik_cfg.restart_seed if rng is None else rng)
    pos = np.array([p.position for p in poses])
    rot = np.array([p.rotation for p in poses])
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    starts = rng.uniform(lo, hi, size=(len(poses), max(ik_cfg.n_restarts - 1, 0), chain.n_joint))
    res = solve_ik_batch(chain, pos, rot, ik_cfg, starts)
    norms = _score_results(chain, res.success, res.q)
    return _voxel_score(pos[0], res.success, norms)


def _solve_chunk(chain, pos, rot, unit_starts, ik_cfg):
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    res = solve_ik_batch(chain, pos, rot, ik_cfg, lo + unit_starts * (hi - lo))
    return res.success, _score_results(chain, res.success, res.q)


class WorkspaceEvaluator:
    """Precomputed targets for scoring many designs on one workspace.

    ``n_workers > 1`` spreads voxel chunks over processes; results do not
    depend on the chunking.
    """

    def __init__(self, spec: WorkspaceSpec, ik_cfg: IkConfig = IkConfig(), n_joint: int = 6,
                 n_workers: int = 1, chunk_voxels: int | None = None):
        self.spec = spec
        self.ik_cfg = ik_cfg
        self.n_joint = n_joint
        self.n_workers = n_workers
        self.centers = build_voxel_grid(spec)
        n_vox, n_rand = len(self.centers), spec.n_rand
        seeds = np.random.SeedSequence(spec.pose_seed).spawn(n_vox)
        quats = np.stack([_orientations(n_rand, s) for s in seeds])
        self.target_pos = np.repeat(self.centers, n_rand, axis=0)
        self.target_rot = Rotation.from_quat(quats.reshape(-1, 4)).as_matrix()
        # drawn restart-major so that fewer restarts use a prefix of the same starts
        rng = np.random.default_rng([ik_cfg.restart_seed, n_joint])
        starts = rng.random((max(ik_cfg.n_restarts - 1, 0), n_vox * n_rand, n_joint))
        self.unit_starts = np.ascontiguousarray(starts.transpose(1, 0, 2))
        if chunk_voxels is None:
            chunk_voxels = -(-n_vox // max(n_workers, 1))
        self.chunk_voxels = max(1, chunk_voxels)

    @property
    def n_voxels(self) -> int:
        return len(self.centers)

    def poses(self, voxel: int) -> list[Pose]:
        n = self.spec.n_rand
        sl = slice(voxel * n, (voxel + 1) * n)
        return [Pose.from_matrix(p, r) for p, r in zip(self.target_pos[sl], self.target_rot[sl])]

    def evaluate_chain(self, chain: KinematicChain, empty_torque: float = 0.0) -> DesignScore:
        if chain.n_joint != self.n_joint:
            raise ValueError(f"evaluator built for {self.n_joint} joints, chain has {chain.n_joint}")
        n_rand = self.spec.n_rand
        step = self.chunk_voxels * n_rand
        bounds = [(s, min(s + step, len(self.target_pos))) for s in range(0, len(self.target_pos), step)]
        args = [(chain, self.target_pos[a:b], self.target_rot[a:b], self.unit_starts[a:b], self.ik_cfg)
                for a, b in bounds]
        if self.n_workers > 1 and len(args) > 1:
            with ProcessPoolExecutor(self.n_workers) as pool:
                parts = list(pool.map(_solve_chunk, *zip(*args)))
        else:
            parts = [_solve_chunk(*a) for a in args]
        success = np.concatenate([p[0] for p in parts]).reshape(-1, n_rand)
        norms = np.concatenate([p[1] for p in parts]).reshape(-1, n_rand)
        voxels = tuple(_voxel_score(c, s, t) for c, s, t in zip(self.centers, success, norms))
        e_reach = math.fsum(v.e_reach for v in voxels)
        e_torque = math.fsum(v.e_torque if v.e_torque is not None else empty_torque for v in voxels)
        return DesignScore(e_reach, e_torque, voxels)

    def evaluate(self, genome: DesignGenome, masses: MassParams = MassParams(),
                 joint_limit: float = DEFAULT_JOINT_LIMIT, empty_torque: float = 0.0) -> DesignScore:
        return self.evaluate_chain(expand_genome(genome, masses, joint_limit), empty_torque)


@functools.lru_cache(maxsize=8)
def _cached_evaluator(spec: WorkspaceSpec, ik_cfg: IkConfig, n_joint: int, n_workers: int) -> WorkspaceEvaluator:
    return WorkspaceEvaluator(spec, ik_cfg, n_joint, n_workers)


def evaluate_design(
    genome: DesignGenome,
    spec: WorkspaceSpec = WorkspaceSpec(),
    masses: MassParams = MassParams(),
    ik_cfg: IkConfig = IkConfig(),
    joint_limit: float = DEFAULT_JOINT_LIMIT,
    n_workers: int = 1,
    empty_torque: float = 0.0,
) -> DesignScore:
    """Total reachability and torque of a design over the whole workspace.

    Voxels the arm never reaches contribute ``empty_torque`` (default 0) to
    the torque total.
    """
    evaluator = _cached_evaluator(spec, ik_cfg, genome.n_joint, n_workers)
    return evaluator.evaluate(genome, masses, joint_limit, empty_torque)


def write_voxel_map(path, score: DesignScore, header: dict | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"kind": "voxel_map", **(header or {})}) + "\n")
        for v in score.per_voxel:
            fh.write(json.dumps(v.to_json()) + "\n")


def read_voxel_map(path) -> tuple[dict, DesignScore]:
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "voxel_map":
        raise ValueError(f"{path}: not a voxel map file")
    voxels = tuple(VoxelScore.from_json(obj) for obj in lines[1:])
    reach = math.fsum(v.e_reach for v in voxels)
    torque = math.fsum(v.e_torque or 0.0 for v in voxels)
    return lines[0], DesignScore(reach, torque, voxels)
