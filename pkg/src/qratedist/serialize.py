"""JSON and CSV encodings for states, channels, codes and curves.

Matrices are ``{"rows", "cols", "entries"}`` with entries a flat row-major
list of ``[re, im]`` pairs. Floats are written with ``repr`` so every value
round-trips exactly.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .channels import KrausChannel
from .entropics import Ensemble
from .exceptions import DimensionError
from .qmath import DensityMatrix, PureState


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    entries = np.asarray(obj["entries"], dtype=float)
    if entries.shape != (rows * cols, 2):
        raise DimensionError(f"expected {rows * cols} [re, im] pairs, got array of shape {entries.shape}")
    return (entries[:, 0] + 1j * entries[:, 1]).reshape(rows, cols)


def state_to_json(rho: DensityMatrix) -> dict:
    out = matrix_to_json(rho.matrix)
    out["dims"] = list(rho.dims)
    return out


def state_from_json(obj: dict) -> DensityMatrix:
    return DensityMatrix(matrix_from_json(obj), obj.get("dims"))


def channel_to_json(ch: KrausChannel) -> dict:
    out = {
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [matrix_to_json(a) for a in ch.kraus],
    }
    if len(ch.dims_in) > 1 or len(ch.dims_out) > 1:
        out["dims_in"] = list(ch.dims_in)
        out["dims_out"] = list(ch.dims_out)
    return out


def channel_from_json(obj: dict) -> KrausChannel:
    ops = np.stack([matrix_from_json(k) for k in obj["kraus"]])
    ch = KrausChannel(ops, obj.get("dims_in"), obj.get("dims_out"))
    if (ch.dim_in, ch.dim_out) != (int(obj["dim_in"]), int(obj["dim_out"])):
        raise DimensionError(
            f"declared {obj['dim_in']} -> {obj['dim_out']}, Kraus operators are {ch.dim_in} -> {ch.dim_out}"
        )
    return ch


def ensemble_to_json(ens: Ensemble) -> dict:
    return {
        "items": [
            {"p": p, "state": [[float(z.real), float(z.imag)] for z in s.amplitudes]}
            for p, s in zip(ens.probabilities, ens.states)
        ]
    }


def ensemble_from_json(obj: dict) -> Ensemble:
    probs, states = [], []
    for item in obj["items"]:
        amp = np.asarray(item["state"], dtype=float)
        probs.append(float(item["p"]))
        states.append(PureState(amp[:, 0] + 1j * amp[:, 1]))
    return Ensemble(tuple(probs), tuple(states))


def code_to_json(code) -> dict:
    return {
        "n": code.n,
        "K": code.channel_dim,
        "encoder": channel_to_json(code.encoder),
        "decoder": channel_to_json(code.decoder),
    }


def code_from_json(obj: dict):
    from .rdopt import RDCode

    return RDCode(
        int(obj["n"]),
        int(obj["K"]),
        channel_from_json(obj["encoder"]),
        channel_from_json(obj["decoder"]),
    )


def _config_to_json(cfg) -> dict:
    from dataclasses import asdict

    return asdict(cfg)


def curve_to_json(curve) -> dict:
    return {
        "source": state_to_json(curve.source),
        "seed": curve.seed,
        "config": _config_to_json(curve.config),
        "grid": list(curve.grid),
        "envelope": list(curve.envelope),
        "points": [
            {
                "D_target": p.distortion_target,
                "R_estimate": p.rate_estimate,
                "witness_distortion": p.witness_distortion,
                "witness": channel_to_json(p.witness_channel),
                "stats": {
                    "restarts": p.optimizer_stats.restarts,
                    "iterations": p.optimizer_stats.iterations,
                    "penalty_residual": p.optimizer_stats.penalty_residual,
                    "restart_spread": p.optimizer_stats.restart_spread,
                    "source": p.optimizer_stats.source,
                    "notes": list(p.optimizer_stats.notes),
                },
            }
            for p in curve.points
        ],
    }


def curve_from_json(obj: dict):
    from .rdopt import OptimizerConfig, OptimizerStats, RDCurve, RDPoint

    points = []
    for p in obj["points"]:
        st = p["stats"]
        stats = OptimizerStats(
            int(st["restarts"]),
            int(st["iterations"]),
            float(st["penalty_residual"]),
            float(st["restart_spread"]),
            st["source"],
            tuple(st.get("notes", ())),
        )
        points.append(
            RDPoint(
                float(p["D_target"]),
                float(p["R_estimate"]),
                channel_from_json(p["witness"]),
                float(p["witness_distortion"]),
                stats,
            )
        )
    return RDCurve(
        state_from_json(obj["source"]),
        tuple(float(g) for g in obj["grid"]),
        tuple(points),
        int(obj["seed"]),
        OptimizerConfig(**obj["config"]),
        tuple(float(e) for e in obj["envelope"]),
    )


CSV_COLUMNS = ("D_target", "R_estimate_raw", "R_estimate_envelope", "witness_distortion", "restarts", "iterations")


def curve_to_csv(curve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p, env in zip(curve.points, curve.envelope):
        w.writerow(
            [
                f"{p.distortion_target:.17g}",
                f"{p.rate_estimate:.17g}",
                f"{env:.17g}",
                f"{p.witness_distortion:.17g}",
                p.optimizer_stats.restarts,
                p.optimizer_stats.iterations,
            ]
        )
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
