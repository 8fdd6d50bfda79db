"""
传输变量、数值通量与边界闭合
"""

import numpy as np
import pytest

from helmholtz_chdg.errors import FluxError
from helmholtz_chdg.fluxes import (
    SideCoefficients,
    TraceState,
    characteristic_impedance,
    incoming_boundary,
    numerical_flux,
    outgoing,
)
from helmholtz_chdg.models import BoundaryTag, FluxKind
from helmholtz_chdg.reference import build_face_operator, build_reference

KINDS = [FluxKind.UPWIND, FluxKind.SYM0, FluxKind.SYM2]


def _random(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@pytest.mark.parametrize("kind", KINDS)
def test_continuous_trace_is_reproduced(kind):
    rng = np.random.default_rng(1)
    ref = build_reference(3)
    op = build_face_operator(kind, 1.0, 2.5, 10.0, 20.0, ref, 0.1)
    p, un = _random(rng, 4), _random(rng, 4)
    mine = SideCoefficients(op.eta, op.eta_neighbor)
    theirs = SideCoefficients(op.eta_neighbor, op.eta)
    g_plus = outgoing(TraceState(p, un), mine, op)
    g_minus = outgoing(TraceState(p, -un), theirs, op)
    flux = numerical_flux(g_plus, g_minus, mine, op)
    np.testing.assert_allclose(flux.p_hat, p, atol=1e-10)
    np.testing.assert_allclose(flux.un_hat, un, atol=1e-10)


@pytest.mark.parametrize("kind", KINDS)
def test_characteristic_relation(kind):
    rng = np.random.default_rng(2)
    op = build_face_operator(kind, 1.0, 3.0, 5.0, 5.0, build_reference(2), 0.3)
    side = SideCoefficients(op.eta, op.eta_neighbor)
    p, un = _random(rng, 3), _random(rng, 3)
    g_plus = outgoing(TraceState(p, un), side, op)
    flux = numerical_flux(g_plus, _random(rng, 3), side, op)
    z = characteristic_impedance(op, side)
    np.testing.assert_allclose(flux.p_hat + z @ flux.un_hat, p + z @ un, atol=1e-10)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("tag", [BoundaryTag.DIRICHLET, BoundaryTag.NEUMANN, BoundaryTag.ROBIN])
def test_boundary_closure(kind, tag):
    rng = np.random.default_rng(3)
    eta = 1.7
    op = build_face_operator(kind, eta, eta, 12.0, 12.0, build_reference(3), 0.2,
                             robin=tag is BoundaryTag.ROBIN)
    side = SideCoefficients(eta, eta)
    g_plus, data = _random(rng, 4), _random(rng, 4)
    g_minus = incoming_boundary(g_plus, tag, data, side, op)
    flux = numerical_flux(g_plus, g_minus, side, op)
    if tag is BoundaryTag.DIRICHLET:
        closure = flux.p_hat
    elif tag is BoundaryTag.NEUMANN:
        closure = flux.un_hat
    else:
        closure = flux.p_hat - eta * flux.un_hat
    np.testing.assert_allclose(closure, data, atol=1e-10)


def test_missing_source_block_means_zero_data():
    op = build_face_operator(FluxKind.SYM0, 1.0, 1.0, 1.0, 1.0, build_reference(1), 1.0)
    side = SideCoefficients(1.0, 1.0)
    g_plus = np.array([1.0 + 1j, 2.0])
    np.testing.assert_allclose(incoming_boundary(g_plus, BoundaryTag.DIRICHLET, None, side, op), -g_plus)


def test_interior_face_has_no_boundary_closure():
    op = build_face_operator(FluxKind.UPWIND, 1.0, 1.0, 1.0, 1.0, build_reference(1), 1.0)
    with pytest.raises(FluxError):
        incoming_boundary(np.ones(2), BoundaryTag.INTERIOR, None, SideCoefficients(1.0, 1.0), op)


def test_robin_requires_robin_operator():
    op = build_face_operator(FluxKind.SYM2, 1.0, 1.0, 1.0, 1.0, build_reference(2), 1.0)
    with pytest.raises(FluxError):
        incoming_boundary(np.ones(3), BoundaryTag.ROBIN, None, SideCoefficients(1.0, 1.0), op)
