"""Second-order periodic finite-difference operators and steady Navier-Stokes residuals.

All stencils wrap around exactly (``np.roll``), so every operator commutes with
grid-index translation and the discrete divergence of a discrete curl vanishes
up to rounding.
"""

from __future__ import annotations

from typing import overload

from .field import FloatArray, FlowSnapshot, ScalarGridField, VectorGridField
from .stencil import central_difference, curl_arrays, second_difference


def _laplace(values: FloatArray, spacing: tuple[float, float, float]) -> FloatArray:
    hx, hy, hz = spacing
    return second_difference(values, 0, hx) + second_difference(values, 1, hy) + second_difference(values, 2, hz)


def gradient(f: ScalarGridField) -> VectorGridField:
    """Central-difference gradient ``(df/dx, df/dy, df/dz)``."""
    return VectorGridField(f.grid, *(central_difference(f.data, axis, h) for axis, h in enumerate(f.grid.spacing)))


def divergence(v: VectorGridField) -> ScalarGridField:
    """Central-difference divergence ``du/dx + dv/dy + dw/dz``."""
    hx, hy, hz = v.grid.spacing
    du, dv, dw = central_difference(v.u, 0, hx), central_difference(v.v, 1, hy), central_difference(v.w, 2, hz)
    return ScalarGridField(v.grid, du + dv + dw)


def curl(v: VectorGridField) -> VectorGridField:
    """Central-difference curl."""
    return VectorGridField(v.grid, *curl_arrays(v.u, v.v, v.w, v.grid.spacing))


@overload
def laplacian(f: ScalarGridField) -> ScalarGridField: ...


@overload
def laplacian(f: VectorGridField) -> VectorGridField: ...


def laplacian(f: ScalarGridField | VectorGridField) -> ScalarGridField | VectorGridField:
    """Seven-point Laplacian, applied per component for vector fields."""
    spacing = f.grid.spacing
    if isinstance(f, ScalarGridField):
        return ScalarGridField(f.grid, _laplace(f.data, spacing))
    return VectorGridField(f.grid, *(_laplace(component, spacing) for component in f.components))


def convective_term(v: VectorGridField) -> VectorGridField:
    """Convective acceleration ``(v . grad) v`` with central differences."""
    spacing = v.grid.spacing

    def advect(component: FloatArray) -> FloatArray:
        dx, dy, dz = (central_difference(component, axis, h) for axis, h in enumerate(spacing))
        return v.u * dx + v.v * dy + v.w * dz

    return VectorGridField(v.grid, *(advect(component) for component in v.components))


def momentum_residual(s: FlowSnapshot, re: float | None = None) -> VectorGridField:
    """Steady momentum residual ``(v . grad) v + grad p - laplacian(v) / re``.

    Args:
        s: Snapshot providing velocity, pressure and (by default) the Reynolds number.
        re: Optional Reynolds number overriding ``s.re``.

    Returns:
        The componentwise residual field.

    Raises:
        ValueError: When the Reynolds number is not positive.
    """
    reynolds = s.re if re is None else re
    if not reynolds > 0:
        raise ValueError(f"Reynolds number {reynolds!r} must be positive for the viscous term.")
    velocity = s.velocity
    convective = convective_term(velocity)
    pressure_gradient = gradient(s.pressure)
    viscous = laplacian(velocity)
    return VectorGridField(
        s.grid,
        *(
            c + g - d / reynolds
            for c, g, d in zip(convective.components, pressure_gradient.components, viscous.components, strict=True)
        ),
    )


def continuity_residual(s: FlowSnapshot) -> ScalarGridField:
    """Divergence of the snapshot velocity."""
    return divergence(s.velocity)


def vorticity(s: FlowSnapshot) -> VectorGridField:
    """Curl of the snapshot velocity."""
    return curl(s.velocity)


def local_re_feature(s: FlowSnapshot) -> ScalarGridField:
    """Dimensionless local turbulence proxy ``re * |v| * hx / lx``."""
    hx = s.grid.spacing[0]
    return ScalarGridField(s.grid, s.re * s.velocity.magnitude() * (hx / s.grid.lx))
