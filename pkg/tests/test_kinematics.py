import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from armdesign.chain_model import LengthBudget, MassParams, close_genome, expand_genome
from armdesign.kinematics import (
    IkConfig,
    Pose,
    fk_batch,
    forward_kinematics,
    jacobian,
    segment_distance,
    self_collision,
    solve_ik,
    solve_ik_batch,
)

from helpers import checked_pairs, collision_oracle, dense_distance, fk_oracle, jacobian_oracle, random_chain


def make_chain(code, lengths, joint_limit=0.75 * math.pi):
    budget = LengthBudget(total=sum(lengths), max_init=max(lengths))
    return expand_genome(close_genome(code, lengths[:-1], budget), MassParams(), joint_limit)


# --- forward kinematics -----------------------------------------------------

def test_zero_pose_points_straight_up():
    rng = np.random.default_rng(0)
    for _ in range(20):
        chain = random_chain(rng)
        _, tip = forward_kinematics(chain, np.zeros(6))
        assert np.allclose(tip.position, [0, 0, 0.6], atol=1e-12)
        assert np.allclose(tip.rotation, np.eye(3), atol=1e-12)


def test_single_pitch_quarter_turn():
    chain = make_chain("P", [0.6])
    _, tip = forward_kinematics(chain, [math.pi / 2])
    assert np.allclose(tip.position, [0.6, 0, 0], atol=1e-9)


def test_base_yaw_leaves_tip_in_place():
    chain = make_chain("YPPPYP", [0.1] * 6)
    for q1 in np.linspace(-2.3, 2.3, 7):
        _, tip = forward_kinematics(chain, [q1, 0, 0, 0, 0, 0])
        assert np.allclose(tip.position, [0, 0, 0.6], atol=1e-12)


def test_fk_matches_transform_oracle():
    rng = np.random.default_rng(1)
    for _ in range(50):
        chain = random_chain(rng, n_joint=int(rng.integers(1, 8)))
        q = rng.uniform(-math.pi, math.pi, chain.n_joint)
        origins, _, _, tip_rot = fk_batch(chain, q)
        pts, rot = fk_oracle(chain, q)
        assert np.allclose(origins[0], pts, atol=1e-12)
        assert np.allclose(tip_rot[0], rot, atol=1e-12)


def test_fk_orientations_stay_unit_norm():
    rng = np.random.default_rng(2)
    chain = random_chain(rng)
    worst_orth, worst_norm = 0.0, 0.0
    for _ in range(10):  # 10 x 1e5 = 1e6 evaluations
        q = rng.uniform(-math.pi, math.pi, (100_000, 6))
        _, _, _, rot = fk_batch(chain, q)
        orth = np.abs(rot @ rot.transpose(0, 2, 1) - np.eye(3)).max()
        quat = Rotation.from_matrix(rot).as_quat()
        worst_orth = max(worst_orth, orth)
        worst_norm = max(worst_norm, np.abs(np.linalg.norm(quat, axis=1) - 1).max())
    assert worst_orth < 1e-12
    assert worst_norm < 1e-12
    poses, tip = forward_kinematics(chain, q[0])
    for p in poses + [tip]:
        assert abs(np.linalg.norm(p.orientation) - 1) < 1e-15


# --- jacobian ---------------------------------------------------------------

def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        chain = random_chain(rng, n_joint=int(rng.integers(1, 8)))
        q = rng.uniform(-math.pi, math.pi, chain.n_joint)
        worst = max(worst, np.abs(jacobian(chain, q) - jacobian_oracle(chain, q)).max())
    assert worst < 1e-5


def test_jacobian_examples():
    chain = make_chain("YPPPYP", [0.1] * 6)
    col = jacobian(chain, np.zeros(6))[:, 0]
    assert np.allclose(col, [0, 0, 0, 0, 0, 1], atol=1e-15)
    single = make_chain("P", [0.6])
    col = jacobian(single, [0.0])[:, 0]
    assert np.array_equal(col[:3], np.cross([0, 1, 0], [0, 0, 0.6]))
    assert np.array_equal(col[3:], [0, 1, 0])


# --- collision --------------------------------------------------------------

def test_segment_distance_matches_dense_sampling():
    rng = np.random.default_rng(4)
    p1, q1, p2, q2 = (rng.uniform(-1, 1, (300, 3)) for _ in range(4))
    # include parallel, crossing and degenerate cases
    q2[:50] = p2[:50] + (q1[:50] - p1[:50])
    q1[50:60] = p1[50:60]
    q2[60:70] = p2[60:70]
    p2[70:80] = 0.5 * (p1[70:80] + q1[70:80])
    fast = segment_distance(p1, q1, p2, q2)
    n = 400
    for k in range(300):
        oracle = dense_distance(p1[k], q1[k], p2[k], q2[k], n)
        spacing = max(np.linalg.norm(q1[k] - p1[k]), np.linalg.norm(q2[k] - p2[k])) / (n - 1)
        assert fast[k] <= oracle + 1e-12
        assert oracle - fast[k] <= spacing
    assert np.allclose(fast[70:80], 0, atol=1e-12)


def test_straight_chain_is_collision_free():
    rng = np.random.default_rng(5)
    for _ in range(50):
        chain = random_chain(rng)
        assert not self_collision(chain, np.zeros(6)).colliding


def test_folded_three_pitch_chain_collides():
    chain = make_chain("PPP", [0.2, 0.2, 0.2], joint_limit=math.pi)
    # search a folded configuration where the oracle sees segments 0 and 2 overlap
    grid = np.linspace(math.pi / 2, math.pi, 13)
    found = None
    for q2 in grid:
        for q3 in grid:
            q = np.array([0.0, q2, q3])
            if collision_oracle(chain, q)[(0, 2)] < 2 * chain.radius - 1e-3:
                found = q
                break
        if found is not None:
            break
    assert found is not None
    res = self_collision(chain, found)
    assert res.colliding
    assert (0, 2) in res.pairs


def test_collision_agrees_with_dense_oracle():
    rng = np.random.default_rng(6)
    n = 300
    for _ in range(200):
        chain = random_chain(rng)
        q = rng.uniform(-2.35, 2.35, 6)
        oracle = collision_oracle(chain, q, n)
        res = self_collision(chain, q)
        spacing = 0.3 / (n - 1)
        for pair, d in oracle.items():
            if d < 2 * chain.radius:
                assert pair in res.pairs
            elif d - spacing > 2 * chain.radius:
                assert pair not in res.pairs


def test_zero_length_links_never_collide():
    chain = make_chain("PPPPPP", [0.6, 0, 0, 0, 0, 0])
    assert chain.collision_pairs == ()
    rng = np.random.default_rng(7)
    for q in rng.uniform(-2.35, 2.35, (100, 6)):
        assert not self_collision(chain, q).colliding


def test_short_links_between_are_exempt_in_the_straight_pose():
    # links 0 and 2 touch end to end through a 1 cm link: not a collision pair
    chain = make_chain("PPPPPP", [0.2, 0.01, 0.2, 0.09, 0.05, 0.05])
    assert (0, 2) not in chain.collision_pairs
    assert (0, 3) in chain.collision_pairs
    assert set(chain.collision_pairs) == set(checked_pairs(list(chain.lengths), chain.radius))


# --- inverse kinematics -----------------------------------------------------

def test_ik_identity_target():
    chain = make_chain("YPPPYP", [0.1] * 6)
    _, tip = forward_kinematics(chain, np.zeros(6))
    res = solve_ik(chain, tip)
    assert res.success
    assert res.restarts_used == 1
    assert res.pos_err < IkConfig().pos_tol
    assert np.allclose(res.q, 0, atol=1e-9)


def test_ik_unreachable_target_fails_after_all_restarts():
    chain = make_chain("YPPPYP", [0.1] * 6)
    target = Pose(np.array([1.0, 0, 0]), np.array([0, 0, 0, 1.0]))
    res = solve_ik(chain, target, IkConfig(n_restarts=5), rng=0)
    assert not res.success
    assert res.restarts_used == 5
    # also when the distance test is bypassed by a marginal target
    res = solve_ik(chain, Pose(np.array([0.0, 0, 0.6 + 0.004]), np.array([0, 0, 0, 1.0])),
                   IkConfig(pos_tol=5e-3), rng=0)
    assert res.success and res.pos_err <= 5e-3


def two_link_solutions(x, z, l1, l2):
    c2 = (x * x + z * z - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    out = []
    for s in (1, -1):
        q2 = s * math.acos(np.clip(c2, -1, 1))
        q1 = math.atan2(x, z) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2))
        out.append(np.array([q1, q2]))
    return out


@pytest.mark.parametrize("target", [(0.3, 0.3), (0.2, 0.35), (-0.25, 0.3), (0.45, 0.1)])
def test_two_link_planar_ik_matches_closed_form(target):
    # orientation is left free (ori_tol = pi) to isolate the position problem
    chain = make_chain("PP", [0.3, 0.3])
    cfg = IkConfig(pos_tol=1e-7, ori_tol=math.pi, max_iters=500)
    x, z = target
    res = solve_ik(chain, Pose(np.array([x, 0, z]), np.array([0, 0, 0, 1.0])), cfg, rng=0)
    assert res.success
    err = min(np.abs(res.q - s).max() for s in two_link_solutions(x, z, 0.3, 0.3))
    assert err < 1e-3


def revalidate(chain, res, target_pos, target_rot, cfg):
    """Re-check a successful IK result with the independent oracles."""
    pts, rot = fk_oracle(chain, res.q)
    assert np.linalg.norm(pts[-1] - target_pos) <= cfg.pos_tol + 1e-12
    if not cfg.position_only:
        angle = np.linalg.norm(Rotation.from_matrix(target_rot @ rot.T).as_rotvec())
        assert angle <= cfg.ori_tol + 1e-12
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    assert np.all(res.q >= lo) and np.all(res.q <= hi)
    for d in collision_oracle(chain, res.q, n=200).values():
        assert d >= 2 * chain.radius  # sampled distance never underestimates


def test_every_success_revalidates():
    rng = np.random.default_rng(8)
    cfg = IkConfig()
    n_success = 0
    for _ in range(12):
        chain = random_chain(rng)
        q_true = rng.uniform(-2.3, 2.3, (20, 6))
        origins, _, _, rot = fk_batch(chain, q_true)
        pos = origins[:, -1] + rng.normal(0, 0.01, (20, 3))  # some targets off the manifold
        starts = rng.uniform(-2.35, 2.35, (20, cfg.n_restarts - 1, 6))
        batch = solve_ik_batch(chain, pos, rot, cfg, starts)
        for k in range(20):
            res = batch[k]
            if res.success:
                n_success += 1
                assert res.collision_free
                assert res.pos_err <= cfg.pos_tol and res.ori_err <= cfg.ori_tol
                revalidate(chain, res, pos[k], rot[k], cfg)
    assert n_success > 20


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ik_success_reproduces_target(seed):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng)
    _, tip = forward_kinematics(chain, rng.uniform(-2.3, 2.3, 6))
    cfg = IkConfig()
    res = solve_ik(chain, tip, cfg, rng=seed)
    if res.success:
        revalidate(chain, res, tip.position, tip.rotation, cfg)


def test_ik_is_deterministic():
    rng = np.random.default_rng(9)
    chain = random_chain(rng)
    _, tip = forward_kinematics(chain, rng.uniform(-2, 2, 6))
    a = solve_ik(chain, tip, IkConfig(), rng=42)
    b = solve_ik(chain, tip, IkConfig(), rng=42)
    assert a.success == b.success and a.restarts_used == b.restarts_used
    assert np.array_equal(a.q, b.q)


def test_batch_matches_single_solves():
    rng = np.random.default_rng(10)
    chain = random_chain(rng)
    cfg = IkConfig()
    q_true = rng.uniform(-2.3, 2.3, (8, 6))
    origins, _, _, rot = fk_batch(chain, q_true)
    starts = rng.uniform(-2.35, 2.35, (8, cfg.n_restarts - 1, 6))
    batch = solve_ik_batch(chain, origins[:, -1], rot, cfg, starts)
    for k in range(8):
        single = solve_ik_batch(chain, origins[k:k + 1, -1], rot[k:k + 1], cfg, starts[k:k + 1])
        assert single.success[0] == batch.success[k]
        assert np.allclose(single.q[0], batch.q[k], atol=1e-12)


def test_ik_config_validation():
    with pytest.raises(ValueError):
        IkConfig(pos_tol=0)
    with pytest.raises(ValueError):
        IkConfig(n_restarts=0)
    assert IkConfig(ori_tol=math.pi).position_only
