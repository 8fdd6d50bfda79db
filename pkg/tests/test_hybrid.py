"""
CHDG 与 HDG 全局系统：交换算子、散射收缩、预条件以及与整体 DG 的等价性
"""

import numpy as np
import pytest

from helmholtz_chdg.analytic.references import cavity_reference
from helmholtz_chdg.dg import PhysicalResidual, dg_oracle
from helmholtz_chdg.fields import PhysicalFields, energy_norm
from helmholtz_chdg.fluxes import build_flux_config
from helmholtz_chdg.hdg import HdgDiscretization
from helmholtz_chdg.hybrid import (
    ChdgDiscretization,
    Sources,
    block_diagonal,
    exchange,
    precondition,
)
from helmholtz_chdg.local import constant_source_loads
from helmholtz_chdg.mesh import assign_coefficients, generate_disk, generate_unit_square
from helmholtz_chdg.models import FluxKind
from helmholtz_chdg.reference import build_reference
from helmholtz_chdg.solvers import fixed_point
from helmholtz_chdg.spectra import materialize

KINDS = [FluxKind.UPWIND, FluxKind.SYM0, FluxKind.SYM2]
SYMMETRIC = [FluxKind.SYM0, FluxKind.SYM2]
MIXED_TAGS = {"top": "dirichlet", "left": "neumann"}
CLOSED_TAGS = {"left": "dirichlet", "right": "dirichlet", "bottom": "neumann", "top": "neumann"}


def _gram(disc):
    return block_diagonal(disc.norm_blocks()).toarray()


def _relative(fields, reference, mesh, ref):
    return energy_norm(mesh, ref, fields - reference) / energy_norm(mesh, ref, reference)


@pytest.mark.parametrize("kind", KINDS)
def test_exchange_without_robin_is_isometric_involution(kind, plane_wave):
    mesh, ref, _, _ = plane_wave(generate_unit_square(2, CLOSED_TAGS), 2)
    disc = ChdgDiscretization(mesh, build_flux_config(mesh, ref, kind))
    pi = disc.pi.toarray()
    gram = _gram(disc)
    np.testing.assert_allclose(pi @ pi, np.eye(pi.shape[0]), atol=1e-12)
    np.testing.assert_allclose(pi.conj().T @ gram @ pi, gram, atol=1e-12)


@pytest.mark.parametrize("kind", SYMMETRIC)
@pytest.mark.parametrize("robin", [True, False])
def test_scattering_contracts_in_impedance_norm(kind, robin, plane_wave):
    if robin:
        mesh, ref, _, _ = plane_wave(generate_unit_square(4), 2)
    else:
        mesh = assign_coefficients(generate_disk(0.125), {1: (12.0, 1.0, 1.0), 2: (12.0, 2 / 3, 1.5)})
        ref = build_reference(2)
    disc = ChdgDiscretization(mesh, build_flux_config(mesh, ref, kind))
    gram = block_diagonal(disc.norm_blocks())
    op = disc.iteration_operator()
    rng = np.random.default_rng(7)
    for _ in range(3):
        g = rng.standard_normal(disc.space.size) + 1j * rng.standard_normal(disc.space.size)
        h = op.matvec(g)
        assert np.vdot(h, gram @ h).real < np.vdot(g, gram @ g).real


def test_iteration_operator_adjoint(plane_wave):
    mesh, ref, _, _ = plane_wave(generate_unit_square(2, MIXED_TAGS), 2)
    op = ChdgDiscretization(mesh, build_flux_config(mesh, ref, FluxKind.SYM2)).iteration_operator()
    rng = np.random.default_rng(11)
    n = op.shape[0]
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.vdot(y, op.matvec(x)) == pytest.approx(np.vdot(op.rmatvec(y), x), rel=1e-12)


def test_upwind_equals_sym0_for_constant_impedance(plane_wave):
    rule = {1: (6.0, 1.0, 1.0), 2: (6.0, 0.5, 2.0)}
    mesh, ref, _, sources = plane_wave(generate_unit_square(2, MIXED_TAGS), 3, rule)
    upwind = ChdgDiscretization(mesh, build_flux_config(mesh, ref, FluxKind.UPWIND))
    sym0 = ChdgDiscretization(mesh, build_flux_config(mesh, ref, FluxKind.SYM0))
    difference = (upwind.sparse_matrix() - sym0.sparse_matrix()).toarray()
    assert np.abs(difference).max() <= 1e-12
    np.testing.assert_allclose(upwind.rhs(sources), sym0.rhs(sources), atol=1e-12)


def test_exchange_returns_boundary_data(plane_wave):
    mesh, ref, _, sources = plane_wave(generate_unit_square(2), 1)
    flux_config = build_flux_config(mesh, ref, FluxKind.SYM0)
    g = np.zeros(3 * mesh.n_elements * ref.n_face, dtype=complex)
    pi_g, b = exchange(g, mesh, flux_config, sources)
    assert not np.any(pi_g)
    assert np.linalg.norm(b) > 0
    _, empty = exchange(g, mesh, flux_config)
    assert not np.any(empty)


def test_preconditioner_preserves_norm_and_spectrum(plane_wave):
    mesh, ref, _, sources = plane_wave(generate_unit_square(2), 1)
    disc = ChdgDiscretization(mesh, build_flux_config(mesh, ref, FluxKind.SYM0))
    system = disc.system(sources)
    pre = precondition(system)

    rng = np.random.default_rng(5)
    g = rng.standard_normal(system.size) + 1j * rng.standard_normal(system.size)
    mass = block_diagonal(disc.mass_blocks())
    assert np.linalg.norm(pre.from_coefficients(g)) ** 2 == pytest.approx(np.vdot(g, mass @ g).real, rel=1e-12)
    np.testing.assert_allclose(pre.to_coefficients(pre.from_coefficients(g)), g, atol=1e-12)

    preconditioned = np.linalg.eigvals(materialize(pre.operator))
    plain = np.linalg.eigvals(materialize(disc.system_operator()))
    for value in preconditioned:
        assert np.abs(plain - value).min() < 1e-7
    for value in plain:
        assert np.abs(preconditioned - value).min() < 1e-7


@pytest.mark.parametrize("degree", [1, 2, 3])
@pytest.mark.parametrize("kind", KINDS)
def test_direct_solutions_match_dg(degree, kind, plane_wave):
    mesh, ref, _, sources = plane_wave(generate_unit_square(2, MIXED_TAGS), degree)
    flux_config = build_flux_config(mesh, ref, kind)
    oracle = dg_oracle(mesh, flux_config, sources)

    chdg = ChdgDiscretization(mesh, flux_config).system(sources)
    chdg_fields = chdg.reconstruct(chdg.solve_direct())
    hdg = HdgDiscretization(mesh, flux_config).system(sources)
    hdg_fields = hdg.reconstruct(hdg.solve_direct())

    assert _relative(chdg_fields, oracle, mesh, ref) <= 1e-9
    assert _relative(hdg_fields, oracle, mesh, ref) <= 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_physical_residual_vanishes_on_hybrid_solutions(kind, plane_wave):
    mesh, ref, _, sources = plane_wave(generate_unit_square(2, MIXED_TAGS), 2)
    flux_config = build_flux_config(mesh, ref, kind)
    physical = PhysicalResidual(mesh, flux_config, sources)
    chdg = ChdgDiscretization(mesh, flux_config).system(sources)
    hdg = HdgDiscretization(mesh, flux_config).system(sources)

    assert physical(dg_oracle(mesh, flux_config, sources)) < 1e-12
    assert physical(chdg.reconstruct(chdg.solve_direct())) < 1e-8
    assert physical(hdg.reconstruct(hdg.solve_direct())) < 1e-8
    zero = PhysicalFields(p=np.zeros((mesh.n_elements, ref.n_volume), dtype=complex),
                          u=np.zeros((mesh.n_elements, 2, ref.n_volume), dtype=complex))
    assert physical(zero) == pytest.approx(1.0)


@pytest.mark.parametrize("kind", [FluxKind.UPWIND, FluxKind.SYM0])
def test_volume_source_solutions_match_dg(kind):
    mesh = assign_coefficients(generate_disk(0.125), {1: (5.0, 1.0, 1.0), 2: (5.0, 1.0, 1.0)})
    ref = build_reference(2)
    reference = cavity_reference(5.0, 5.0, 1.0, 1.0)
    sources = Sources(volume=constant_source_loads(mesh, ref, reference.source(mesh.kappa, mesh.eta)))
    flux_config = build_flux_config(mesh, ref, kind)
    oracle = dg_oracle(mesh, flux_config, sources)

    chdg = ChdgDiscretization(mesh, flux_config).system(sources)
    hdg = HdgDiscretization(mesh, flux_config).system(sources)
    assert _relative(chdg.reconstruct(chdg.solve_direct()), oracle, mesh, ref) <= 1e-9
    assert _relative(hdg.reconstruct(hdg.solve_direct()), oracle, mesh, ref) <= 1e-9


def test_fixed_point_reaches_direct_solution(plane_wave):
    mesh, ref, _, sources = plane_wave(generate_unit_square(4), 2)
    disc = ChdgDiscretization(mesh, build_flux_config(mesh, ref, FluxKind.SYM0))
    system = disc.system(sources)
    pre = precondition(system)
    report = fixed_point(pre.operator, pre.rhs, tol=1e-10, max_iter=20000)
    assert report.converged and not report.diverged
    direct = system.solve_direct()
    iterate = pre.to_coefficients(report.solution)
    assert np.linalg.norm(iterate - direct) <= 1e-7 * np.linalg.norm(direct)
