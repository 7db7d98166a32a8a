"""Static gravity torques of a serial chain."""

from __future__ import annotations

import numpy as np

from .chain_model import KinematicChain
from .kinematics import fk_batch


def gravity_torque_from(chain: KinematicChain, origins: np.ndarray, z_world: np.ndarray) -> np.ndarray:
    """Gravity moment about every joint axis, batched over configurations.

    With gravity along -z only the horizontal lever arm matters, so for joint
    ``k``::

        tau_k = -g * (z_x * S_y - z_y * S_x),   S = sum_m m (p_m - p_k)

    summed over the motor masses at joints ``k..N-1`` and the link masses at
    the midpoints of links ``k..N-1``.  This equals ``-dU/dq_k`` for the
    potential ``U = sum m g z_m``.
    """
    mids = 0.5 * (origins[:, :-1] + origins[:, 1:])
    joints = origins[:, :-1]
    m_motor = chain.motor_masses
    m_link = chain.link_masses
    # distal sums, accumulated from the tip so masses beyond k are included
    mp = m_motor[:, None] * joints[..., :2] + m_link[:, None] * mids[..., :2]
    moment = np.cumsum(mp[:, ::-1], axis=1)[:, ::-1]
    mass = np.cumsum((m_motor + m_link)[::-1])[::-1]
    arm = moment - mass[:, None] * joints[..., :2]
    return -chain.g * (z_world[..., 0] * arm[..., 1] - z_world[..., 1] * arm[..., 0])


def gravity_torque(chain: KinematicChain, q) -> np.ndarray:
    """Gravity torque (N m) at each joint in configuration ``q``.

    Returned as ``-dU/dq``; the actuator holding effort is its negation, so
    norms are unaffected.
    """
    origins, z_world, _, _ = fk_batch(chain, np.asarray(q, dtype=float)[None])
    return gravity_torque_from(chain, origins, z_world)[0]


def potential_energy(chain: KinematicChain, q) -> float:
    origins, _, _, _ = fk_batch(chain, np.asarray(q, dtype=float)[None])
    z_joint = origins[0, :-1, 2]
    z_mid = 0.5 * (origins[0, :-1, 2] + origins[0, 1:, 2])
    return float(chain.g * (chain.motor_masses @ z_joint + chain.link_masses @ z_mid))


def torque_norm(tau) -> float:
    return float(np.linalg.norm(np.asarray(tau, dtype=float)))
