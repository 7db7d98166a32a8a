"""Per-family summary of a finished (or partial) search."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from .motpe import ParetoArchive
from .plots import trial_family


def length_ratios(archive: ParetoArchive, total: float) -> dict[str, dict[str, list[float]]]:
    """Mean and std of each link's share of the total length, per family."""
    groups: dict[str, list[list[float]]] = defaultdict(list)
    for t in archive.trials:
        lengths = list(t.params) + [total - sum(t.params)]
        groups[trial_family(t)].append([v / total for v in lengths])
    return {
        fam: {"mean": np.mean(rows, axis=0).round(4).tolist(), "std": np.std(rows, axis=0).round(4).tolist()}
        for fam, rows in sorted(groups.items())
    }


def report(archive: ParetoArchive, total_length: float = 0.6) -> dict:
    """Family counts, front membership, best-reach member and length ratios."""
    if len(archive) == 0:
        raise ValueError("empty archive")
    front = set(archive.front)
    groups: dict[str, list[int]] = defaultdict(list)
    for k, t in enumerate(archive.trials):
        groups[trial_family(t)].append(k)
    ratios = length_ratios(archive, total_length)

    families = {}
    for fam, idx in groups.items():
        # highest reach, then lowest torque, then earliest
        best = max(idx, key=lambda k: (-archive.trials[k].objectives[0], -archive.trials[k].objectives[1], -k))
        bt = archive.trials[best]
        families[fam] = {
            "count": len(idx),
            "front_count": sum(1 for k in idx if k in front),
            "best_reach": {"id": bt.id, "e_reach": -bt.objectives[0], "e_torque": bt.objectives[1],
                           "on_front": best in front},
            "length_ratio_mean": ratios[fam]["mean"],
            "length_ratio_std": ratios[fam]["std"],
        }
    ordered = sorted(families, key=lambda f: (-families[f]["front_count"], -families[f]["count"], f))
    return {
        "n_trials": len(archive),
        "n_front": len(front),
        "front_families": [f for f in ordered if families[f]["front_count"] > 0],
        "families": {f: families[f] for f in ordered},
    }


def render_markdown(summary: dict, config_hash: str | None = None) -> str:
    lines = ["# Design search report", ""]
    if config_hash:
        lines += [f"config hash: `{config_hash}`", ""]
    lines += [
        f"- trials: {summary['n_trials']}",
        f"- Pareto-optimal trials: {summary['n_front']}",
        f"- families on the front: {', '.join(summary['front_families']) or 'none'}",
        "",
        "| family | trials | on front | best E_reach | its E_torque [N m] | trial id | link length ratios |",
        "|---|---|---|---|---|---|---|",
    ]
    for fam, s in summary["families"].items():
        b = s["best_reach"]
        ratios = " / ".join(f"{v:.2f}" for v in s["length_ratio_mean"])
        lines.append(f"| {fam} | {s['count']} | {s['front_count']} | {b['e_reach']:.3f} | "
                     f"{b['e_torque']:.2f} | {b['id']} | {ratios} |")
    return "\n".join(lines) + "\n"
