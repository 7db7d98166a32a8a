"""Reachability and torque maps of one 6-DOF design.

Scores a Yaw-Pitch-Pitch-Pitch-Yaw-Pitch arm with equal links on the
default workspace and writes one SVG per objective.

    python demos/voxel_map.py [out_dir]
"""

import sys
from pathlib import Path

from armdesign import LengthBudget, WorkspaceEvaluator, WorkspaceSpec, close_genome
from armdesign.plots import emit_voxel_map

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

# five free lengths, the sixth closes the 0.6 m budget
genome = close_genome("YPPPYP", [0.1] * 5, LengthBudget(total=0.6, max_init=0.3))
print("genome", genome.code, [round(v, 3) for v in genome.lengths])

spec = WorkspaceSpec(n_rand=10)
score = WorkspaceEvaluator(spec).evaluate(genome)
print(f"E_reach = {score.e_reach_total:.2f} over {len(score.per_voxel)} voxels")
print(f"E_torque = {score.e_torque_total:.2f} N m")

for mode in ("reach", "torque"):
    emit_voxel_map(score, mode, out / f"voxel_{mode}.svg", title=f"{genome.code}: E_{mode}")
print("wrote", out / "voxel_reach.svg", out / "voxel_torque.svg")
