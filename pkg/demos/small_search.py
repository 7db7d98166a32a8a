"""A short design search, its Pareto front and per-family report.

Uses a coarse workspace and few trials so it finishes in about a minute;
the desk preset (``armdesign optimize --preset desk``) is the full run.

    python demos/small_search.py [out_dir]
"""

import sys
from pathlib import Path

from armdesign.config import config_from_dict
from armdesign.plots import emit_pareto_plot
from armdesign.report import render_markdown, report
from armdesign.study import classify_family, design_space, family_colors, run_study, trial_genome

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)

cfg = config_from_dict({
    "workspace": {"d_voxel": 0.25, "n_rand": 4},
    "ik": {"n_restarts": 3},
    "motpe": {"n_startup": 20, "n_total": 60, "seed": 0},
})
archive = run_study(cfg, out / "trials.jsonl")

space = design_space(cfg)
print(f"{len(archive)} trials, {len(archive.front)} on the front (config {cfg.hash()})")
for k in sorted(archive.front, key=lambda k: archive.trials[k].objectives[0]):
    t = archive.trials[k]
    g = trial_genome(t, space)
    print(f"  {g.code}  {classify_family(g):>6}  reach {-t.objectives[0]:6.2f}  torque {t.objectives[1]:7.2f}")

emit_pareto_plot(archive, family_colors(cfg.n_joint), out / "pareto.svg", cfg.hash())
(out / "report.md").write_text(render_markdown(report(archive, cfg.length.total), cfg.hash()))
print("wrote", out / "pareto.svg", out / "report.md")
