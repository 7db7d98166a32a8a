"""Export a design as URDF and check it reads back to the same chain.

    python demos/urdf_export.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from armdesign import LengthBudget, MassParams, close_genome, expand_genome, export_urdf, forward_kinematics
from armdesign.chain_model import chain_from_urdf

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

genome = close_genome("PRRYPY", [0.2, 0.1, 0.05, 0.1, 0.1], LengthBudget(0.6, 0.3))
chain = expand_genome(genome, MassParams())
print(f"{genome.code}: {chain.n_joint} joints, total mass {chain.total_mass:.3f} kg")

xml = export_urdf(chain, name=genome.code)
(out / f"{genome.code}.urdf").write_text(xml)

back = chain_from_urdf(xml)
q = np.random.default_rng(0).uniform(-1, 1, chain.n_joint)
a = forward_kinematics(chain, q)[1].position
b = forward_kinematics(back, q)[1].position
print("tip at random q:", a.round(4), "round trip error", float(np.abs(a - b).max()))
print("wrote", out / f"{genome.code}.urdf")
