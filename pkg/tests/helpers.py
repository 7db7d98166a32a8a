"""Shared generators and independent oracles for the tests."""

import math

import numpy as np
from scipy.spatial.transform import Rotation

from armdesign.chain_model import LengthBudget, MassParams, canonicalize_joints, close_genome, expand_genome


def random_genome(rng, n_joint=6, budget=LengthBudget()):
    raw = rng.integers(0, 3, n_joint)
    lengths = []
    for _ in range(n_joint - 1):
        bound = max(0.0, min(budget.max_init, budget.total - sum(lengths)))
        lengths.append(float(rng.uniform(0, bound)))
    return close_genome(canonicalize_joints(int(c) for c in raw), lengths, budget)


def random_chain(rng, n_joint=6, masses=MassParams()):
    return expand_genome(random_genome(rng, n_joint), masses)


def fk_oracle(chain, q):
    """Homogeneous-transform product, written independently of fk_batch."""
    t = np.eye(4)
    points = [t[:3, 3].copy()]
    for axis, length, angle in zip(chain.axes, chain.lengths, q):
        rot = np.eye(4)
        rot[:3, :3] = Rotation.from_rotvec(axis * angle).as_matrix()
        shift = np.eye(4)
        shift[2, 3] = length
        t = t @ rot @ shift
        points.append(t[:3, 3].copy())
    return np.array(points), t[:3, :3]


def jacobian_oracle(chain, q, h=1e-6):
    jac = np.zeros((6, len(q)))
    for i in range(len(q)):
        dq = np.zeros(len(q))
        dq[i] = h
        p_plus, r_plus = fk_oracle(chain, q + dq)
        p_minus, r_minus = fk_oracle(chain, q - dq)
        jac[:3, i] = (p_plus[-1] - p_minus[-1]) / (2 * h)
        jac[3:, i] = Rotation.from_matrix(r_plus @ r_minus.T).as_rotvec() / (2 * h)
    return jac


def dense_distance(p1, q1, p2, q2, n=400):
    """Upper bound on segment distance from point sampling; error <= max spacing."""
    t = np.linspace(0, 1, n)[:, None]
    a = p1 + t * (q1 - p1)
    b = p2 + t * (q2 - p2)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    return math.sqrt(d2.min())


def checked_pairs(lengths, radius):
    idx = [i for i, v in enumerate(lengths) if v > 0]
    return [(idx[a], idx[b]) for a in range(len(idx)) for b in range(a + 2, len(idx))
            if sum(lengths[idx[a] + 1:idx[b]]) >= 2 * radius]


def collision_oracle(chain, q, n=400):
    pts, _ = fk_oracle(chain, q)
    return {(i, j): dense_distance(pts[i], pts[i + 1], pts[j], pts[j + 1], n)
            for i, j in checked_pairs(list(chain.lengths), chain.radius)}


def pareto_fronts_oracle(points):
    """Repeatedly peel the set of points no remaining point dominates, O(n^2) each."""
    pts = [tuple(p) for p in np.asarray(points, dtype=float)]
    remaining = list(range(len(pts)))
    fronts = []

    def dom(a, b):
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    while remaining:
        front = [i for i in remaining if not any(dom(pts[j], pts[i]) for j in remaining)]
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in front]
    return fronts


TOY_REFERENCE = (1.1, 1.1)


def toy_hypervolumes(seed, n_total=500, n_startup=100):
    """Final front hypervolume of MOTPE and of paired random search on min (x, 1 - x)."""
    import dataclasses

    from armdesign.motpe import BoxSpace, MotpeConfig, run_optimization
    from armdesign.pareto import hypervolume_2d

    space = BoxSpace(np.array([0.0]), np.array([1.0]))

    def toy(x):
        return (x[0], 1.0 - x[0])

    cfg = MotpeConfig(n_startup=n_startup, n_total=n_total, seed=seed)
    out = []
    for c in (cfg, dataclasses.replace(cfg, n_startup=n_total)):
        archive = run_optimization(toy, space, c)
        out.append(hypervolume_2d([archive.trials[k].objectives for k in archive.front], TOY_REFERENCE))
    return tuple(out)


# a 2 x 2 x 1 voxel workspace with two orientations each: fast end-to-end runs
TINY_CONFIG = {
    "workspace": {"x_min": -0.3, "x_max": 0.3, "y_min": -0.3, "y_max": 0.3,
                  "z_min": 0.0, "z_max": 0.4, "d_voxel": 0.3, "n_rand": 2},
    "ik": {"n_restarts": 2, "max_iters": 60},
    "motpe": {"n_startup": 5, "n_total": 12, "seed": 1},
}


def first_front_oracle(objectives):
    """Indices not dominated by any other point, from the full n x n comparison."""
    obj = np.asarray(objectives, dtype=float)
    le = np.all(obj[:, None, :] <= obj[None, :, :], axis=2)
    lt = np.any(obj[:, None, :] < obj[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    return np.flatnonzero(~dominated).tolist()
