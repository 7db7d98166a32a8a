import itertools
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armdesign.chain_model import (
    DEFAULT_JOINT_LIMIT,
    DesignGenome,
    GenomeError,
    JointType,
    LengthBudget,
    MassParams,
    canonicalize_joints,
    chain_from_urdf,
    close_genome,
    expand_genome,
    export_urdf,
    joints_from_str,
    joints_to_str,
    length_bound,
)

from helpers import random_genome

BUDGET = LengthBudget(0.6, 0.3)
joint_letters = st.lists(st.sampled_from("RPY"), min_size=1, max_size=9)


def is_canonical(code: str) -> bool:
    return all(b == "P" for a, b in zip(code, code[1:]) if a == "Y")


@pytest.mark.parametrize("raw, expected", [
    ("YRPPYR", "YPPPYP"),
    ("PRRYPY", "PRRYPY"),
    ("YYY", "YPY"),
    ("Y", "Y"),
    ("RRR", "RRR"),
])
def test_canonicalize_examples(raw, expected):
    assert joints_to_str(canonicalize_joints(raw)) == expected


def test_canonicalize_accepts_indices_and_enums():
    assert canonicalize_joints([2, 2, 0]) == canonicalize_joints([JointType.YAW, "Y", "R"])
    assert joints_to_str(canonicalize_joints([2, 2, 0])) == "YPR"


@given(joint_letters)
def test_canonicalize_properties(raw):
    code = joints_to_str(canonicalize_joints(raw))
    assert len(code) == len(raw)
    assert is_canonical(code)
    assert joints_to_str(canonicalize_joints(code)) == code  # idempotent
    assert code[0] == raw[0]
    # only joints right after a Yaw change
    for k in range(1, len(raw)):
        if code[k - 1] != "Y":
            assert code[k] == raw[k]


def test_canonical_image_is_exactly_the_valid_sequences():
    # brute force over every raw 6-joint sequence
    image = {joints_to_str(canonicalize_joints(r)) for r in itertools.product("RPY", repeat=6)}
    valid = {"".join(s) for s in itertools.product("RPY", repeat=6) if is_canonical("".join(s))}
    assert image == valid
    # independent count: a Y may only follow a non-Y, and after a Y only P is allowed
    end_y, other = 1, 2
    for _ in range(5):
        end_y, other = other, 2 * other + end_y
    assert len(valid) == end_y + other


def test_joint_axes():
    assert np.array_equal(JointType.ROLL.axis, [1, 0, 0])
    assert np.array_equal(JointType.PITCH.axis, [0, 1, 0])
    assert np.array_equal(JointType.YAW.axis, [0, 0, 1])
    assert joints_from_str("ypr") == (JointType.YAW, JointType.PITCH, JointType.ROLL)
    with pytest.raises(ValueError):
        JointType.parse("Q")


@pytest.mark.parametrize("so_far, expected", [([], 0.3), ([0.25, 0.2], 0.15), ([0.3, 0.3], 0.0)])
def test_length_bound_examples(so_far, expected):
    assert length_bound(so_far, BUDGET) == pytest.approx(expected, abs=1e-12)


def test_length_bound_rejects_overspent_budget():
    with pytest.raises(GenomeError):
        length_bound([0.3, 0.31], BUDGET)


def test_close_genome_examples():
    g = close_genome("YPPPYP", [0.3, 0.1, 0.05, 0.05, 0.05], BUDGET)
    assert g.lengths[-1] == pytest.approx(0.05, abs=1e-12)
    assert math.fsum(g.lengths) == pytest.approx(0.6, abs=1e-12)
    g = close_genome("YPPPYP", [0.3, 0.3, 0.0, 0.0, 0.0], BUDGET)
    assert g.lengths[-1] == 0.0


def test_close_genome_rejects_overspend_and_bad_shapes():
    with pytest.raises(GenomeError):
        close_genome("PPPPPP", [0.3, 0.3, 0.01, 0.0, 0.0], BUDGET)  # sums to 0.61
    with pytest.raises(GenomeError):
        close_genome("PPPPPP", [0.31, 0.0, 0.0, 0.0, 0.0], BUDGET)
    with pytest.raises(GenomeError):
        close_genome("PPPPPP", [0.1, 0.1], BUDGET)
    with pytest.raises(GenomeError):
        close_genome("PPPPPP", [-0.1, 0.1, 0.1, 0.1, 0.1], BUDGET)


def test_genome_rejects_yaw_not_followed_by_pitch():
    with pytest.raises(GenomeError):
        DesignGenome(joints_from_str("YR"), (0.3, 0.3))
    with pytest.raises(GenomeError):
        DesignGenome(joints_from_str("PP"), (0.3, -0.1))
    with pytest.raises(GenomeError):
        DesignGenome(joints_from_str("PP"), (0.3,))


@settings(max_examples=200)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_closed_genomes_satisfy_budget(n_joint, seed):
    g = random_genome(np.random.default_rng(seed), n_joint, BUDGET)
    g.check_budget(BUDGET)
    assert is_canonical(g.code)
    assert all(v >= 0 for v in g.lengths)
    assert DesignGenome.from_json(g.to_json()) == g


def test_expand_genome_masses_and_axes():
    g = close_genome("YPPPYP", [0.1] * 5, BUDGET)
    chain = expand_genome(g, MassParams(0.5, 1000, 0.015, 9.81))
    # hand sum: six motors plus one cylinder of the full length
    assert chain.total_mass == pytest.approx(3.0 + math.pi * 0.000225 * 0.6 * 1000, abs=1e-12)
    assert chain.total_mass == pytest.approx(3.4241, abs=1e-4)
    assert np.array_equal(chain.axes[:2], [[0, 0, 1], [0, 1, 0]])
    assert np.allclose(chain.joint_limits, [[-DEFAULT_JOINT_LIMIT, DEFAULT_JOINT_LIMIT]] * 6)
    assert chain.total_length == pytest.approx(0.6)


def test_zero_length_link_has_no_mass():
    g = close_genome("PPPPPP", [0.2, 0.2, 0.0, 0.1, 0.05], BUDGET)
    chain = expand_genome(g, MassParams())
    assert chain.link_masses[2] == 0.0
    assert chain.segments[2].length == 0.0
    assert chain.motor_masses[2] == 0.5


def test_chain_arrays_are_read_only():
    chain = expand_genome(close_genome("PPPPPP", [0.1] * 5, BUDGET), MassParams())
    with pytest.raises(ValueError):
        chain.lengths[0] = 1.0


def test_urdf_structure():
    g = close_genome("PRRYPY", [0.1, 0.05, 0.2, 0.1, 0.1], BUDGET)
    xml = export_urdf(expand_genome(g, MassParams()), name=g.code)
    root = ET.fromstring(xml)
    assert root.tag == "robot"
    revolute = [j for j in root.iter("joint") if j.get("type") == "revolute"]
    assert len(revolute) == 6
    for j in revolute:
        lim = j.find("limit")
        assert float(lim.get("lower")) == pytest.approx(-2.35619449, abs=1e-8)
        assert float(lim.get("upper")) == pytest.approx(2.35619449, abs=1e-8)
    axes = [tuple(float(v) for v in j.find("axis").get("xyz").split()) for j in revolute]
    assert axes == [tuple(JointType(c).axis) for c in g.code]


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_urdf_round_trip(n_joint, seed):
    rng = np.random.default_rng(seed)
    g = random_genome(rng, n_joint, BUDGET)
    masses = MassParams(m_motor=float(rng.uniform(0.1, 1)), rho=float(rng.uniform(500, 3000)))
    chain = expand_genome(g, masses, joint_limit=float(rng.uniform(0.5, 3)))
    back = chain_from_urdf(export_urdf(chain))
    assert back.allclose(chain, atol=1e-9)
    assert back.collision_pairs == chain.collision_pairs


def test_urdf_parse_rejects_garbage():
    with pytest.raises(ValueError):
        chain_from_urdf("<robot name='x'/>")
