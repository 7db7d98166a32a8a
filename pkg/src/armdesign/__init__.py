"""Search over serial manipulator structures (joint types and link lengths)
for end-effector reachability against gravity torque."""

from .chain_model import (
    DesignGenome,
    JointType,
    KinematicChain,
    LengthBudget,
    MassParams,
    canonicalize_joints,
    close_genome,
    expand_genome,
    export_urdf,
    length_bound,
)
from .config import RunConfig, load_config
from .kinematics import IkConfig, Pose, forward_kinematics, jacobian, self_collision, solve_ik
from .motpe import DesignSpace, MotpeConfig, ParetoArchive, run_optimization, suggest
from .pareto import hypervolume_2d, nondominated_sort
from .statics import gravity_torque, torque_norm
from .study import classify_family, run_study
from .workspace import WorkspaceEvaluator, WorkspaceSpec, build_voxel_grid, evaluate_design, sample_poses

__version__ = "0.1.0"

__all__ = [
    "DesignGenome", "JointType", "KinematicChain", "LengthBudget", "MassParams",
    "canonicalize_joints", "close_genome", "expand_genome", "export_urdf", "length_bound",
    "RunConfig", "load_config",
    "IkConfig", "Pose", "forward_kinematics", "jacobian", "self_collision", "solve_ik",
    "DesignSpace", "MotpeConfig", "ParetoArchive", "run_optimization", "suggest",
    "hypervolume_2d", "nondominated_sort",
    "gravity_torque", "torque_norm",
    "classify_family", "run_study",
    "WorkspaceEvaluator", "WorkspaceSpec", "build_voxel_grid", "evaluate_design", "sample_poses",
]
