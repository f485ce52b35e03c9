"""Result bundling, CSV export, and static SVG plots.

CSV files are UTF-8, comma-separated, LF-terminated, one header row, floats
at 17 significant digits so every 64-bit value survives a parse/format
round trip bit-exactly. Provenance (config hash, version, seed, wall time)
goes to a JSON sidecar so data files stay byte-reproducible.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .simulate import Trajectory
from .spectral import BodeData
from .vehicle import DissipativityReport


@dataclass
class ResultBundle:
    """Artifacts of one CLI command, plus provenance metadata."""

    kind: str  # steady-force | simulate | equilibrium | stability-chart | bode | check-dissipativity
    config_hash: str
    seed: int
    payload: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": __version__,
            "wall_time_s": self.wall_time,
        }


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_table(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for i in range(rows):
            f.write(",".join(fmt(c[i]) for c in columns) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read back a bundle CSV: (header, data) with full float precision."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split(",")
        data = np.array([[float(v) for v in line.rstrip("\n").split(",")]
                         for line in f if line.strip()])
    return header, data


def write_csv(bundle: ResultBundle, out_dir) -> list[Path]:
    """Write the bundle's tables; returns the created file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    def emit(name, header, columns):
        path = out / name
        _write_table(path, header, columns)
        paths.append(path)

    kind, p = bundle.kind, bundle.payload
    if kind == "steady-force":
        emit("steady_force.csv", ["v", "F_closed", "F_quadrature"],
             [p["v"], p["F_closed"], p["F_quadrature"]])
    elif kind == "simulate":
        tr: Trajectory = p["trajectory"]
        emit("trajectory.csv", ["t", "vy", "r", "Fy1", "Fy2", "ay_g"],
             [tr.t, tr.v_y, tr.r, tr.F_y1, tr.F_y2, tr.ay_g])
    elif kind == "equilibrium":
        eq = p["equilibrium"]
        emit("equilibrium.csv",
             ["delta1", "delta2", "vy_star", "r_star", "v1_star", "v2_star",
              "Fy1_star", "Fy2_star", "residual"],
             [np.array([v]) for v in (
                 eq.delta_star[0], eq.delta_star[1], eq.x_star[0], eq.x_star[1],
                 eq.v_star[0], eq.v_star[1], eq.F_star[0], eq.F_star[1], eq.residual)])
    elif kind == "stability-chart":
        chi, vx, counts = p["chi"], p["vx"], p["counts"]
        cc, vv = np.meshgrid(chi, vx, indexing="ij")
        emit("stability_chart.csv", ["chi", "vx", "unstable_roots"],
             [cc.ravel(), vv.ravel(), counts.ravel().astype(float)])
    elif kind == "bode":
        bode: BodeData = p["bode"]
        outs = ("vy", "r", "Fy1", "Fy2", "ayg")
        ins = ("d1", "d2")
        header = ["omega_rad_s"]
        cols = [bode.omegas]
        for j, i_name in enumerate(ins):
            for k, o_name in enumerate(outs):
                header += [f"mag_db_{o_name}_{i_name}", f"phase_deg_{o_name}_{i_name}"]
                cols += [bode.mag_db[:, k, j], bode.phase_deg[:, k, j]]
        emit("bode.csv", header, cols)
    elif kind == "check-dissipativity":
        rep: DissipativityReport = p["report"]
        emit("dissipativity.csv",
             ["holds_H1", "holds_H2", "max_psi_pbar", "prop1_checked", "prop1_max"],
             [np.array([float(rep.holds_H1)]), np.array([float(rep.holds_H2)]),
              np.array([rep.max_psi_pbar]), np.array([float(rep.prop1_checked)]),
              np.array([rep.prop1_max])])
        (out / "dissipativity_note.txt").write_text(rep.note + "\n", encoding="utf-8")
        paths.append(out / "dissipativity_note.txt")
    else:
        raise ValueError(f"unknown bundle kind {kind!r}")

    meta_path = out / "run_metadata.json"
    meta_path.write_text(json.dumps(bundle.metadata(), indent=2) + "\n", encoding="utf-8")
    paths.append(meta_path)
    return paths


def render_svg(bundle: ResultBundle, out_dir) -> Path:
    """Render the bundle's standard plot as a standalone SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind, p = bundle.kind, bundle.payload

    if kind == "simulate":
        tr: Trajectory = p["trajectory"]
        fig, axes = plt.subplots(4, 1, figsize=(7, 9), sharex=True)
        for ax, (y, label) in zip(axes, [(tr.v_y, "v_y [m/s]"), (tr.r, "r [rad/s]"),
                                         (tr.F_y1, "F_y1 [N]"), (tr.F_y2, "F_y2 [N]")]):
            ax.plot(tr.t, y, lw=0.9)
            ax.set_ylabel(label)
            ax.grid(alpha=0.3)
        axes[-1].set_xlabel("t [s]")
        path = out / "trajectory.svg"
    elif kind == "stability-chart":
        chi, vx, counts = p["chi"], p["vx"], p["counts"]
        fig, ax = plt.subplots(figsize=(7, 5))
        unstable = (counts > 0).astype(float)
        # white = unstable islands on a coloured background
        ax.pcolormesh(vx, chi, unstable, cmap="Blues_r", vmin=0.0, vmax=1.0, shading="nearest")
        ax.set_xlabel("v_x [m/s]")
        ax.set_ylabel("understeer index chi")
        ax.set_title("unstable islands (white)")
        path = out / "stability_chart.svg"
    elif kind == "bode":
        bode: BodeData = p["bode"]
        outs = ("v_y", "r", "F_y1", "F_y2", "a_y/g")
        fig, axes = plt.subplots(5, 2, figsize=(9, 12), sharex=True)
        for k, name in enumerate(outs):
            axes[k, 0].semilogx(bode.omegas, bode.mag_db[:, k, 0], lw=0.9)
            axes[k, 0].set_ylabel(f"|{name}| [dB]")
            axes[k, 0].grid(alpha=0.3, which="both")
            axes[k, 1].semilogx(bode.omegas, bode.phase_deg[:, k, 0], lw=0.9)
            axes[k, 1].set_ylabel(f"arg {name} [deg]")
            axes[k, 1].grid(alpha=0.3, which="both")
        axes[-1, 0].set_xlabel("omega [rad/s]")
        axes[-1, 1].set_xlabel("omega [rad/s]")
        path = out / "bode.svg"
    elif kind == "steady-force":
        fig, ax = plt.subplots(figsize=(7, 5))
        ax.plot(p["v"], p["F_closed"], lw=1.0, label="closed form")
        ax.plot(p["v"], p["F_quadrature"], lw=0.8, ls="--", label="quadrature")
        ax.set_xlabel("relative velocity v [m/s]")
        ax.set_ylabel("steady force F [N]")
        ax.grid(alpha=0.3)
        ax.legend()
        path = out / "steady_force.svg"
    else:
        raise ValueError(f"no plot defined for bundle kind {kind!r}")

    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def timed_bundle(kind: str, config_hash: str, seed: int, payload: dict,
                 started: float) -> ResultBundle:
    return ResultBundle(kind=kind, config_hash=config_hash, seed=seed,
                        payload=payload, wall_time=time.time() - started)
