"""Deterministic SVG output for trial scatters and voxel maps.

SVG is written directly (no plotting backend) so the same input always gives
the same bytes.
"""

from __future__ import annotations

from collections.abc import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .chain_model import JOINT_CHOICES
from .motpe import ParetoArchive
from .study import OTHER_COLOR, classify_family
from .workspace import DesignScore

UNDEFINED_COLOR = "#808080"
REACH_RANGE = (0.0, 1.0)
TORQUE_RANGE = (3.0, 10.0)


def _rgb(red_fraction: float) -> str:
    t = float(np.clip(red_fraction, 0.0, 1.0))
    return f"rgb({round(255 * t)},{round(255 * (1 - t))},0)"


def reach_color(e_reach: float) -> str:
    """0 -> red, 1 -> green."""
    lo, hi = REACH_RANGE
    return _rgb(1.0 - (e_reach - lo) / (hi - lo))


def torque_color(e_torque: float | None) -> str:
    """3 N m -> green, 10 N m -> red, clamped; gray when undefined."""
    if e_torque is None:
        return UNDEFINED_COLOR
    lo, hi = TORQUE_RANGE
    return _rgb((e_torque - lo) / (hi - lo))


def _num(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return list(np.linspace(lo, hi, n))


def _header(width: int, height: int, config_hash: str | None) -> list[str]:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">']
    if config_hash:
        out.append(f'<metadata>config_hash={escape(config_hash)}</metadata>')
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    return out


def pareto_svg(
    trials: Sequence,
    front: Sequence[int],
    families: Sequence[str],
    family_colors: dict[str, str],
    config_hash: str | None = None,
    title: str = "Sampled designs",
) -> str:
    """Scatter of (E_reach, E_torque) per trial; front members get a ring."""
    if len(trials) == 0:
        raise ValueError("cannot plot an empty archive")
    obj = np.array([t.objectives for t in trials], dtype=float)
    reach, torque = -obj[:, 0], obj[:, 1]
    w, h, ml, mr, mt, mb = 640, 460, 70, 140, 40, 50
    pw, ph = w - ml - mr, h - mt - mb
    x_lo, x_hi = 0.0, max(float(reach.max()), 1e-9) * 1.05
    t_lo, t_hi = 0.0, max(float(torque.max()), 1e-9) * 1.05

    def sx(v):
        return ml + pw * (v - x_lo) / (x_hi - x_lo)

    def sy(v):
        return mt + ph * (1 - (v - t_lo) / (t_hi - t_lo))

    out = _header(w, h, config_hash)
    out.append(f'<text x="{w / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for v in _ticks(x_lo, x_hi):
        out.append(f'<text x="{sx(v):.1f}" y="{mt + ph + 15}" text-anchor="middle">{_num(v)}</text>')
    for v in _ticks(t_lo, t_hi):
        out.append(f'<text x="{ml - 5}" y="{sy(v) + 4:.1f}" text-anchor="end">{_num(v)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{h - 12}" text-anchor="middle">E_reach [-]</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">E_torque [N m]</text>')

    for k in range(len(trials)):
        color = family_colors.get(families[k], OTHER_COLOR)
        out.append(f'<circle class="trial" data-id="{trials[k].id}" data-family="{escape(families[k])}" '
                   f'cx="{sx(reach[k]):.2f}" cy="{sy(torque[k]):.2f}" r="2.5" fill="{color}"/>')
    for k in sorted(front):
        out.append(f'<circle class="front" data-id="{trials[k].id}" cx="{sx(reach[k]):.2f}" '
                   f'cy="{sy(torque[k]):.2f}" r="5" fill="none" stroke="black" stroke-width="1.2"/>')

    ly = mt
    for fam, color in list(family_colors.items()) + [("other", OTHER_COLOR)]:
        out.append(f'<rect class="legend" x="{w - mr + 15}" y="{ly}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{w - mr + 30}" y="{ly + 9}">{escape(fam)}</text>')
        ly += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def trial_family(trial) -> str:
    if len(trial.choices) < 4:
        return "other"
    return classify_family("".join(JOINT_CHOICES[c].value for c in trial.choices))


def emit_pareto_plot(archive: ParetoArchive, family_colors: dict[str, str], path=None,
                     config_hash: str | None = None, title: str = "Sampled designs") -> str:
    """Render an archive, coloring trials by joint family."""
    if len(archive) == 0:
        raise ValueError("cannot plot an empty archive")
    families = [trial_family(t) for t in archive.trials]
    svg = pareto_svg(archive.trials, archive.front, families, family_colors, config_hash, title)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(svg)
    return svg


def emit_voxel_map(score: DesignScore, mode: str = "reach", path=None,
                   config_hash: str | None = None, title: str | None = None) -> str:
    """One panel per z layer, cells colored by reachability or torque."""
    if mode not in ("reach", "torque"):
        raise ValueError("mode must be 'reach' or 'torque'")
    if not score.per_voxel:
        raise ValueError("score has no voxels")
    centers = np.array([v.center for v in score.per_voxel])
    xs, ys, zs = (np.unique(np.round(centers[:, k], 9)) for k in range(3))
    cell, gap, margin = 24, 30, 30
    panel_w, panel_h = cell * len(xs), cell * len(ys)
    w = margin * 2 + len(zs) * panel_w + (len(zs) - 1) * gap
    h = margin * 2 + panel_h + 30
    out = _header(w, h, config_hash)
    label = title or f"E_{mode} per voxel"
    out.append(f'<text x="{w / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(label)}</text>')
    for p, z in enumerate(zs):
        x0 = margin + p * (panel_w + gap)
        out.append(f'<g class="layer" data-z="{z:.6g}">')
        out.append(f'<text x="{x0 + panel_w / 2:.1f}" y="{margin + panel_h + 18}" '
                   f'text-anchor="middle">z = {z:.2f} m</text>')
        for v in score.per_voxel:
            if not np.isclose(v.center[2], z):
                continue
            i = int(np.argmin(np.abs(xs - v.center[0])))
            j = int(np.argmin(np.abs(ys - v.center[1])))
            fill = reach_color(v.e_reach) if mode == "reach" else torque_color(v.e_torque)
            # y grows upward in the workspace
            out.append(f'<rect class="voxel" x="{x0 + i * cell}" y="{margin + (len(ys) - 1 - j) * cell}" '
                       f'width="{cell}" height="{cell}" fill="{fill}" stroke="white"/>')
        out.append("</g>")
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(svg)
    return svg
