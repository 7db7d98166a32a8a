"""Forward kinematics, Jacobian, inverse kinematics and self-collision.

Everything is vectorized over a leading batch axis so that a whole voxel map
(hundreds of IK targets) is solved in one numpy loop.  Quaternions use the
scalar-last ``(x, y, z, w)`` order of :mod:`scipy.spatial.transform`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .chain_model import KinematicChain


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray  # unit quaternion, (x, y, z, w)

    def __post_init__(self):
        q = np.asarray(self.orientation, dtype=float)
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "orientation", q / np.linalg.norm(q))

    @property
    def rotation(self) -> np.ndarray:
        return Rotation.from_quat(self.orientation).as_matrix()

    @classmethod
    def from_matrix(cls, position, rotation) -> "Pose":
        return cls(position, Rotation.from_matrix(rotation).as_quat())


@dataclass(frozen=True)
class IkConfig:
    max_iters: int = 200
    damping: float = 0.1
    pos_tol: float = 5e-3
    ori_tol: float = 0.05
    n_restarts: int = 5
    restart_seed: int = 0
    # give up an attempt when the error has not dropped by 5% over this window
    stall_window: int = 20
    stall_ratio: float = 0.95
    max_pos_step: float = 0.1
    max_rot_step: float = 0.5

    def __post_init__(self):
        if self.pos_tol <= 0 or self.ori_tol <= 0:
            raise ValueError("IK tolerances must be positive")
        if self.n_restarts < 1 or self.max_iters < 1:
            raise ValueError("n_restarts and max_iters must be >= 1")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")

    @property
    def position_only(self) -> bool:
        """An orientation tolerance of pi accepts every orientation."""
        return self.ori_tol >= math.pi


@dataclass(frozen=True)
class IkResult:
    success: bool
    q: np.ndarray
    pos_err: float
    ori_err: float
    restarts_used: int
    collision_free: bool


@dataclass(frozen=True)
class CollisionResult:
    colliding: bool
    pairs: list[tuple[int, int]]


# --- forward kinematics -----------------------------------------------------

def _skew(v: np.ndarray) -> np.ndarray:
    k = np.zeros(v.shape[:-1] + (3, 3))
    k[..., 0, 1], k[..., 0, 2] = -v[..., 2], v[..., 1]
    k[..., 1, 0], k[..., 1, 2] = v[..., 2], -v[..., 0]
    k[..., 2, 0], k[..., 2, 1] = -v[..., 1], v[..., 0]
    return k


def _joint_rotations(axes: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Rodrigues rotations, (B, N) angles -> (B, N, 3, 3)."""
    k = _skew(axes)
    kk = k @ k
    s = np.sin(q)[..., None, None]
    c = np.cos(q)[..., None, None]
    return np.eye(3) + s * k + (1.0 - c) * kk


def fk_batch(chain: KinematicChain, q: np.ndarray):
    """Batched forward kinematics.

    Returns ``(origins, z_world, frames, tip_rot)`` where ``origins`` is
    (B, N+1, 3) holding every joint origin plus the tip, ``z_world`` (B, N, 3)
    the world joint axes, ``frames`` (B, N, 3, 3) the link frame after each
    joint and ``tip_rot`` (B, 3, 3).
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    b, n = q.shape
    rots = _joint_rotations(chain.axes, q)
    origins = np.empty((b, n + 1, 3))
    z_world = np.empty((b, n, 3))
    frames = np.empty((b, n, 3, 3))
    r = np.broadcast_to(np.eye(3), (b, 3, 3))
    p = np.zeros((b, 3))
    for i in range(n):
        origins[:, i] = p
        z_world[:, i] = r @ chain.axes[i]
        r = r @ rots[:, i]
        frames[:, i] = r
        p = p + r[:, :, 2] * chain.lengths[i]
    origins[:, n] = p
    return origins, z_world, frames, r


def forward_kinematics(chain: KinematicChain, q) -> tuple[list[Pose], Pose]:
    """Pose of every joint frame (after its rotation) and of the end effector."""
    origins, _, frames, tip_rot = fk_batch(chain, np.asarray(q, dtype=float)[None])
    joints = [Pose.from_matrix(origins[0, i], frames[0, i]) for i in range(chain.n_joint)]
    return joints, Pose.from_matrix(origins[0, -1], tip_rot[0])


def _jacobian_from(origins: np.ndarray, z_world: np.ndarray) -> np.ndarray:
    tip = origins[:, -1:, :]
    lin = np.cross(z_world, tip - origins[:, :-1])
    return np.concatenate([lin, z_world], axis=2).transpose(0, 2, 1)


def jacobian(chain: KinematicChain, q) -> np.ndarray:
    """Geometric 6 x N Jacobian of the tip, rows (linear, angular), world frame."""
    origins, z_world, _, _ = fk_batch(chain, np.asarray(q, dtype=float)[None])
    return _jacobian_from(origins, z_world)[0]


# --- self-collision ---------------------------------------------------------

def segment_distance(p1, q1, p2, q2) -> np.ndarray:
    """Closest distance between segments [p1, q1] and [p2, q2], batched on the
    leading axes (standard clamped closest-point construction)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.einsum("...i,...i", d1, d1)
    e = np.einsum("...i,...i", d2, d2)
    f = np.einsum("...i,...i", d2, r)
    c = np.einsum("...i,...i", d1, r)
    b = np.einsum("...i,...i", d1, d2)
    eps = 1e-18
    a_ok, e_ok = a > eps, e > eps
    a_s = np.where(a_ok, a, 1.0)
    e_s = np.where(e_ok, e, 1.0)
    denom = a * e - b * b
    denom_s = np.where(denom > eps, denom, 1.0)

    s = np.where(denom > eps, np.clip((b * f - c * e) / denom_s, 0.0, 1.0), 0.0)
    t = (b * s + f) / e_s
    # t out of range: clamp it and recompute s for the clamped t
    s = np.where(t < 0, np.clip(-c / a_s, 0.0, 1.0), s)
    s = np.where(t > 1, np.clip((b - c) / a_s, 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    # degenerate segments (points)
    s = np.where(~e_ok, np.clip(-c / a_s, 0.0, 1.0), s)
    t = np.where(~e_ok, 0.0, t)
    s = np.where(~a_ok, 0.0, s)
    t = np.where(~a_ok, np.clip(f / e_s, 0.0, 1.0), t)

    c1 = p1 + d1 * s[..., None]
    c2 = p2 + d2 * t[..., None]
    return np.linalg.norm(c1 - c2, axis=-1)


def _pair_distances(chain: KinematicChain, origins: np.ndarray) -> np.ndarray:
    pairs = np.array(chain.collision_pairs, dtype=int).reshape(-1, 2)
    if len(pairs) == 0:
        return np.zeros((origins.shape[0], 0))
    i, j = pairs[:, 0], pairs[:, 1]
    return segment_distance(origins[:, i], origins[:, i + 1], origins[:, j], origins[:, j + 1])


def collision_batch(chain: KinematicChain, origins: np.ndarray) -> np.ndarray:
    """Boolean (B,) self-collision flags from precomputed joint origins."""
    dist = _pair_distances(chain, origins)
    return np.any(dist < 2 * chain.radius, axis=1)


def self_collision(chain: KinematicChain, q) -> CollisionResult:
    """Capsule self-collision check.

    Links are capsules of the chain radius.  Zero-length links are skipped,
    and so are neighbouring links and links already touching in the straight
    pose (less than two radii of chain between them).
    """
    origins, _, _, _ = fk_batch(chain, np.asarray(q, dtype=float)[None])
    dist = _pair_distances(chain, origins)[0]
    hits = [chain.collision_pairs[k] for k in np.flatnonzero(dist < 2 * chain.radius)]
    return CollisionResult(bool(hits), hits)


# --- inverse kinematics -----------------------------------------------------

def _pose_error(origins, tip_rot, target_pos, target_rot):
    dp = target_pos - origins[:, -1]
    drot = Rotation.from_matrix(target_rot @ tip_rot.transpose(0, 2, 1)).as_rotvec()
    return dp, drot


def _limit_gradient(q: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # |dH/dq| of the joint-range performance criterion
    # H = sum (hi - lo)^2 / (4 (hi - q)(q - lo))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (hi - lo) ** 2 * (2 * q - hi - lo) / (4 * (hi - q) ** 2 * (q - lo) ** 2)
    return np.minimum(np.abs(np.nan_to_num(g, nan=1e12, posinf=1e12, neginf=1e12)), 1e12)


@dataclass
class IkBatchResult:
    success: np.ndarray
    q: np.ndarray
    pos_err: np.ndarray
    ori_err: np.ndarray
    restarts_used: np.ndarray
    collision_free: np.ndarray

    def __getitem__(self, k: int) -> IkResult:
        return IkResult(bool(self.success[k]), self.q[k].copy(), float(self.pos_err[k]),
                        float(self.ori_err[k]), int(self.restarts_used[k]), bool(self.collision_free[k]))


def _solve_attempt(chain, q0, target_pos, target_rot, cfg: IkConfig):
    """Run one damped least-squares attempt for every row of ``q0``.

    Returns the final joints, per-row convergence flags and final errors.
    A row stops iterating once it converges or stalls.
    """
    b, n = q0.shape
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    q = q0.copy()
    converged = np.zeros(b, dtype=bool)
    pos_err = np.full(b, np.inf)
    ori_err = np.full(b, np.inf)
    active = np.arange(b)
    prev_grad = np.full((b, n), np.inf)
    window_ref = np.full(b, np.inf)
    rows = 3 if cfg.position_only else 6
    damp = cfg.damping**2 * np.eye(rows)

    for it in range(cfg.max_iters + 1):
        if active.size == 0:
            break
        qa = q[active]
        origins, z_world, _, tip_rot = fk_batch(chain, qa)
        dp, drot = _pose_error(origins, tip_rot, target_pos[active], target_rot[active])
        pe = np.linalg.norm(dp, axis=1)
        oe = np.linalg.norm(drot, axis=1)
        pos_err[active], ori_err[active] = pe, oe
        ori_ok = True if cfg.position_only else oe <= cfg.ori_tol
        done = (pe <= cfg.pos_tol) & ori_ok
        converged[active[done]] = True

        metric = np.maximum(pe / cfg.pos_tol, 0.0 if cfg.position_only else oe / cfg.ori_tol)
        keep = ~done
        if it == cfg.max_iters:
            break
        if it % cfg.stall_window == 0:
            if it > 0:
                keep &= metric < cfg.stall_ratio * window_ref[active]
            window_ref[active] = metric
        if not keep.any():
            active = active[keep]
            break
        active, qa = active[keep], qa[keep]
        dp, drot = dp[keep], drot[keep]
        origins, z_world = origins[keep], z_world[keep]

        # clamp the task-space step
        dp_n = np.linalg.norm(dp, axis=1, keepdims=True)
        dp = dp * np.minimum(1.0, cfg.max_pos_step / np.maximum(dp_n, 1e-300))
        err = dp
        jac = _jacobian_from(origins, z_world)[:, :rows]
        if not cfg.position_only:
            dr_n = np.linalg.norm(drot, axis=1, keepdims=True)
            drot = drot * np.minimum(1.0, cfg.max_rot_step / np.maximum(dr_n, 1e-300))
            err = np.concatenate([dp, drot], axis=1)

        # weighted least-norm: penalize only motion that approaches a limit
        grad = _limit_gradient(qa, lo, hi)
        w = np.where(grad > prev_grad[active], 1.0 + grad, 1.0)
        prev_grad[active] = grad
        w_inv = 1.0 / w
        jw = jac * w_inv[:, None, :]
        a = jw @ jac.transpose(0, 2, 1) + damp
        x = np.linalg.solve(a, err[..., None])[..., 0]
        dq = np.einsum("bri,br->bi", jw, x)
        q[active] = np.clip(qa + dq, lo, hi)

    return q, converged, pos_err, ori_err


def solve_ik_batch(
    chain: KinematicChain,
    target_pos: np.ndarray,
    target_rot: np.ndarray,
    cfg: IkConfig,
    restart_starts: np.ndarray,
) -> IkBatchResult:
    """Solve many IK problems at once.

    The first attempt starts every target from ``q = 0``; failed targets are
    retried from ``restart_starts[:, k]`` (shape (B, n_restarts - 1, N)).  A
    target succeeds only if it converges within tolerance to a
    self-collision-free configuration.  Targets farther from the base than
    the total chain length are rejected without iterating.
    """
    target_pos = np.asarray(target_pos, dtype=float).reshape(-1, 3)
    target_rot = np.asarray(target_rot, dtype=float).reshape(-1, 3, 3)
    b, n = target_pos.shape[0], chain.n_joint
    success = np.zeros(b, dtype=bool)
    coll_free = np.zeros(b, dtype=bool)
    q_out = np.zeros((b, n))
    pos_err = np.full(b, np.inf)
    ori_err = np.full(b, np.inf)
    used = np.zeros(b, dtype=int)

    reach = np.linalg.norm(target_pos, axis=1) <= chain.total_length + cfg.pos_tol
    used[~reach] = cfg.n_restarts
    pending = np.flatnonzero(reach)
    for attempt in range(cfg.n_restarts):
        if pending.size == 0:
            break
        q0 = np.zeros((pending.size, n)) if attempt == 0 else restart_starts[pending, attempt - 1]
        q, conv, pe, oe = _solve_attempt(chain, q0, target_pos[pending], target_rot[pending], cfg)
        used[pending] = attempt + 1
        better = pe < pos_err[pending]
        keep_idx = pending[better | conv]
        q_out[keep_idx] = q[better | conv]
        pos_err[keep_idx] = pe[better | conv]
        ori_err[keep_idx] = oe[better | conv]
        free = np.ones(pending.size, dtype=bool)
        if conv.any():
            origins, _, _, _ = fk_batch(chain, q[conv])
            free[conv] = ~collision_batch(chain, origins)
        ok = conv & free
        success[pending[ok]] = True
        coll_free[pending[conv]] = free[conv]
        pending = pending[~ok]
    return IkBatchResult(success, q_out, pos_err, ori_err, used, coll_free)


def random_restarts(chain: KinematicChain, n_restarts: int, rng, batch: int = 1) -> np.ndarray:
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    return rng.uniform(lo, hi, size=(batch, max(n_restarts - 1, 0), chain.n_joint))


def solve_ik(chain: KinematicChain, target: Pose, cfg: IkConfig = IkConfig(), rng=None) -> IkResult:
    """Damped least-squares IK with joint-limit weighting and random restarts.

    Never raises for unreachable targets; the result has ``success=False``.
    ``rng`` may be a :class:`numpy.random.Generator`, a seed, or ``None`` to
    use ``cfg.restart_seed``.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(cfg.restart_seed if rng is None else rng)
    starts = random_restarts(chain, cfg.n_restarts, rng)
    res = solve_ik_batch(chain, target.position[None], target.rotation[None], cfg, starts)
    return res[0]
