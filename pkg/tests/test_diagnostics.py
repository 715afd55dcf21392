from __future__ import annotations

import re

import numpy as np
import pytest

from velomap.diagnostics import payload_fingerprint, snapshot_diagnostics, snapshot_fingerprint
from velomap.field import FlowSnapshot, with_reynolds


def test_taylor_green_diagnostics_are_healthy(tg16: FlowSnapshot) -> None:
    diagnostics = snapshot_diagnostics(tg16)
    assert diagnostics["grid"] == [16, 16, 16]
    assert diagnostics["health_status"] == "ok"
    assert diagnostics["health_hints"] == []
    assert diagnostics["max_divergence"] <= 1e-12
    assert diagnostics["kinetic_energy"] > 0
    assert re.fullmatch(r"[0-9a-f]{16}", diagnostics["fingerprint"])


def test_divergent_field_raises_warning(tg16: FlowSnapshot) -> None:
    x, _, _ = tg16.grid.coordinates()
    zeros = np.zeros(tg16.grid.shape)
    source = FlowSnapshot(tg16.grid, np.sin(x), zeros, zeros, zeros, zeros, re=10.0, pr=1.0)
    diagnostics = snapshot_diagnostics(source)
    assert diagnostics["health_status"] == "warning"
    assert "divergence" in diagnostics["health_hints"][0]


def test_snapshot_fingerprint_tracks_content(tg16: FlowSnapshot) -> None:
    assert snapshot_fingerprint(tg16) == snapshot_fingerprint(with_reynolds(tg16, 100.0))
    assert snapshot_fingerprint(tg16) != snapshot_fingerprint(with_reynolds(tg16, 200.0))


def test_payload_fingerprint_ignores_key_order() -> None:
    assert payload_fingerprint({"a": 1, "b": [2, 3]}) == payload_fingerprint({"b": [2, 3], "a": 1})
    assert payload_fingerprint({"a": 1}) != payload_fingerprint({"a": 2})


def test_max_local_re_scales_with_reynolds(tg16: FlowSnapshot) -> None:
    base = snapshot_diagnostics(tg16)["max_local_re"]
    assert snapshot_diagnostics(with_reynolds(tg16, 200.0))["max_local_re"] == pytest.approx(2 * base, rel=1e-14)
