"""Diagnostics for snapshots and reports."""

from __future__ import annotations

import hashlib
import json
import math
from collections.abc import Mapping
from typing import Literal, TypedDict

import numpy as np

from .field import FlowSnapshot
from .nsops import continuity_residual, local_re_feature, momentum_residual

# Relative divergence above this means the velocity is not discretely solenoidal.
DIVERGENCE_WARNING_LEVEL = 1e-8

type HealthStatus = Literal["ok", "warning"]


class SnapshotDiagnostics(TypedDict):
    """Physics summary of one snapshot."""

    grid: list[int]
    re: float
    pr: float
    max_divergence: float
    relative_divergence: float
    momentum_residual_rms: float
    kinetic_energy: float
    max_local_re: float
    health_status: HealthStatus
    health_hints: list[str]
    fingerprint: str


def payload_fingerprint(payload: Mapping[str, object]) -> str:
    """Short stable hash of a JSON-serialisable payload."""
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode("utf-8")).hexdigest()[:16]


def snapshot_fingerprint(snapshot: FlowSnapshot) -> str:
    """Short stable hash of the grid, physics parameters and every field value."""
    digest = hashlib.sha256()
    grid = snapshot.grid
    digest.update(json.dumps([*grid.shape, *grid.lengths, snapshot.re, snapshot.pr]).encode("utf-8"))
    for values in (snapshot.u, snapshot.v, snapshot.w, snapshot.p, snapshot.t_field):
        digest.update(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return digest.hexdigest()[:16]


def snapshot_diagnostics(snapshot: FlowSnapshot) -> SnapshotDiagnostics:
    """Divergence, momentum residual, energy and turbulence-proxy summary of ``snapshot``."""
    velocity = snapshot.velocity
    speed = velocity.magnitude()
    max_speed = float(speed.max())
    max_divergence = continuity_residual(snapshot).max_norm()
    hx = snapshot.grid.spacing[0]
    relative_divergence = 0.0 if max_speed == 0 else max_divergence * hx / max_speed

    residual = momentum_residual(snapshot)
    residual_rms = math.sqrt(float(np.mean(sum(component**2 for component in residual.components))))

    hints: list[str] = []
    if relative_divergence > DIVERGENCE_WARNING_LEVEL:
        hints.append(f"Velocity divergence {relative_divergence:.3g} (relative) exceeds {DIVERGENCE_WARNING_LEVEL:g}.")
    status: HealthStatus = "warning" if hints else "ok"

    return SnapshotDiagnostics(
        grid=list(snapshot.grid.shape),
        re=snapshot.re,
        pr=snapshot.pr,
        max_divergence=max_divergence,
        relative_divergence=relative_divergence,
        momentum_residual_rms=residual_rms,
        kinetic_energy=float(np.mean(0.5 * speed**2)),
        max_local_re=local_re_feature(snapshot).max_norm(),
        health_status=status,
        health_hints=hints,
        fingerprint=snapshot_fingerprint(snapshot),
    )
