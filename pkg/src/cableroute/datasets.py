"""On-disk and in-memory dataset containers.

A dataset is a directory: `manifest.json` plus one line-delimited JSON
record file per trajectory.  Grids are stored sparsely (index/value pairs
with exact float repr) so stored observations round-trip bit-identically
against a re-render of the embedded scene snapshot, which is the dataset
integrity contract.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .config import RenderConfig, SimConfig, config_hash


class EmptyDataset(ValueError):
    pass


def grid_to_sparse(grid: np.ndarray) -> dict:
    flat = grid.ravel()
    idx = np.nonzero(flat)[0]
    return {"shape": list(grid.shape),
            "cells": [[int(i), float(flat[i])] for i in idx]}


def sparse_to_grid(spec: dict) -> np.ndarray:
    grid = np.zeros(int(np.prod(spec["shape"])))
    for i, v in spec["cells"]:
        grid[i] = v
    return grid.reshape(spec["shape"])


@dataclass
class LowStep:
    snapshot: dict
    wrist: np.ndarray
    z: float
    action: np.ndarray          # physical twist, (4,)

    def to_record(self) -> dict:
        return {"snapshot": self.snapshot, "wrist": grid_to_sparse(self.wrist),
                "z": self.z, "action": [float(v) for v in self.action]}

    @staticmethod
    def from_record(rec: dict) -> "LowStep":
        return LowStep(rec["snapshot"], sparse_to_grid(rec["wrist"]),
                       float(rec["z"]), np.array(rec["action"]))


@dataclass
class Decision:
    snapshot: dict
    wrist: np.ndarray
    side: np.ndarray
    z: float
    history: tuple              # 6 ids, most recent first, before this decision
    label: int                  # primitive id 1..4
    source: str = "oracle"      # oracle | policy | human
    proposal: int | None = None
    probs: list | None = None
    adjacent: list = field(default_factory=list)   # [{"snapshot":..}, ...]

    def to_record(self) -> dict:
        return {"snapshot": self.snapshot, "wrist": grid_to_sparse(self.wrist),
                "side": grid_to_sparse(self.side), "z": self.z,
                "history": list(self.history), "label": self.label,
                "source": self.source, "proposal": self.proposal,
                "probs": self.probs, "adjacent": self.adjacent}

    @staticmethod
    def from_record(rec: dict) -> "Decision":
        return Decision(rec["snapshot"], sparse_to_grid(rec["wrist"]),
                        sparse_to_grid(rec["side"]), float(rec["z"]),
                        tuple(rec["history"]), int(rec["label"]), rec["source"],
                        rec.get("proposal"), rec.get("probs"),
                        rec.get("adjacent", []))


@dataclass
class Trajectory:
    """One episode: low-level steps or high-level decisions (+ embedded motion)."""
    seed: int
    steps: list = field(default_factory=list)       # LowStep (level == low)
    decisions: list = field(default_factory=list)   # Decision (level == high)
    lowlevel: list = field(default_factory=list)    # embedded primitive motion logs
    success: bool = True

    def to_record(self, level: str) -> dict:
        rec = {"seed": self.seed, "success": self.success}
        if level == "low":
            rec["steps"] = [s.to_record() for s in self.steps]
        else:
            rec["decisions"] = [d.to_record() for d in self.decisions]
            rec["lowlevel"] = self.lowlevel
        return rec

    @staticmethod
    def from_record(rec: dict, level: str) -> "Trajectory":
        t = Trajectory(seed=rec["seed"], success=rec.get("success", True))
        if level == "low":
            t.steps = [LowStep.from_record(r) for r in rec["steps"]]
        else:
            t.decisions = [Decision.from_record(r) for r in rec["decisions"]]
            t.lowlevel = rec.get("lowlevel", [])
        return t


@dataclass
class Dataset:
    level: str                  # "low" | "high"
    sim: SimConfig
    render: RenderConfig
    seed: int
    trajectories: list = field(default_factory=list)

    def manifest(self) -> dict:
        return {"version": 1, "level": self.level,
                "sim_config_hash": config_hash(self.sim),
                "sim": dataclasses.asdict(self.sim),
                "render": dataclasses.asdict(self.render),
                "seed": self.seed, "count": len(self.trajectories)}

    def save(self, path: str):
        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, "manifest.json"), "w") as fh:
            json.dump(self.manifest(), fh, indent=1)
        for i, traj in enumerate(self.trajectories):
            fname = os.path.join(path, f"traj_{i:05d}.jsonl")
            with open(fname, "w") as fh:
                fh.write(json.dumps(traj.to_record(self.level),
                                    separators=(",", ":")) + "\n")

    @staticmethod
    def load(path: str) -> "Dataset":
        with open(os.path.join(path, "manifest.json")) as fh:
            man = json.load(fh)
        sim_cfg = SimConfig(**{k: tuple(v) if isinstance(v, list) else v
                               for k, v in man["sim"].items()})
        render_cfg = RenderConfig(**man["render"])
        ds = Dataset(man["level"], sim_cfg, render_cfg, man["seed"])
        for i in range(man["count"]):
            fname = os.path.join(path, f"traj_{i:05d}.jsonl")
            with open(fname) as fh:
                ds.trajectories.append(
                    Trajectory.from_record(json.loads(fh.readline()), ds.level))
        if len(ds.trajectories) != man["count"]:
            raise ValueError("manifest count mismatch")
        return ds

    def n_steps(self) -> int:
        if self.level == "low":
            return sum(len(t.steps) for t in self.trajectories)
        return sum(len(t.decisions) for t in self.trajectories)
