import numpy as np
import pytest
from unittest.mock import patch

from eksmor.core.exceptions import ReductionError
from eksmor.models.analysis import FrequencyGrid
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.reduction import PortDecomposition, PortResult, ReducedModel
from eksmor.services import krylov_service as kry
from eksmor.services import regularize_service
from eksmor.services.reduction import ExtendedKrylovReduction, StandardKrylovReduction
from eksmor.services.superpose_service import (
    SuperpositionService,
    assemble_H,
    reduce_all_ports,
    response_set,
)
from tests.factories import mesh_model, model_transfer, random_rc_model, relative


@pytest.fixture
def model():
    return random_rc_model(40, 3, seed=17)


@pytest.fixture
def grid():
    return FrequencyGrid.log_spaced(1e-2, 1e2, 9)


def permuted_ports(model: DescriptorModel, perm) -> DescriptorModel:
    B1 = model.B1.toarray()[:, perm]
    return DescriptorModel(
        G=model.G, C=model.C, M=model.M, W=model.W,
        B1=B1, L1=B1.T, D=model.D.toarray()[np.ix_(perm, perm)],
        node_names=model.node_names,
    )


@pytest.mark.asyncio
@pytest.mark.parametrize("method", ["mm", "eks"])
async def test_single_port_matches_direct_reduction(method):
    model = random_rc_model(30, 1, seed=2)
    pd = await reduce_all_ports(model, method, k=3, workers=2)
    ops = kry.make_operators(model)
    if method == "mm":
        basis = kry.standard_basis(ops, ops.solve_A(model.B), 3)
    else:
        basis = kry.extended_basis(ops, ops.solve_A(model.B), r=3, p=1)
    direct = kry.project(model, basis)
    rom = pd.entries[0].rom
    assert np.allclose(rom.A, direct.A)
    assert np.allclose(rom.E, direct.E)
    assert np.allclose(rom.B, direct.B)
    assert np.allclose(rom.L, direct.L)


@pytest.mark.asyncio
async def test_each_port_gets_a_simo_rom(model):
    pd = await reduce_all_ports(model, "eks", k=2)
    assert [e.port for e in pd.entries] == [0, 1, 2]
    assert pd.failed_ports == []
    for entry in pd.entries:
        assert entry.rom.p == 1
        assert entry.rom.q == 3
        assert entry.rom.r <= 4
        assert entry.orthogonality_error < 1e-10


@pytest.mark.asyncio
async def test_failing_port_is_reported_not_raised(model):
    original = StandardKrylovReduction.build_basis

    def flaky(self, system, inputs, k):
        if np.allclose(inputs, system.input_column(1)):
            raise ReductionError("synthetic failure")
        return original(self, system, inputs, k)

    with patch.object(StandardKrylovReduction, "build_basis", flaky):
        pd = await SuperpositionService(model, workers=3).reduce_all_ports("mm", 2)

    assert pd.failed_ports == [1]
    failed = pd.entries[1]
    assert failed.rom is None
    assert "synthetic failure" in failed.error
    assert pd.entries[0].rom is not None and pd.entries[2].rom is not None


@pytest.mark.asyncio
async def test_unexpected_exception_becomes_port_failure(model):
    with patch.object(ExtendedKrylovReduction, "build_basis", side_effect=ValueError("boom")):
        pd = await SuperpositionService(model).reduce_all_ports("eks", 2)
    assert pd.failed_ports == [0, 1, 2]
    assert all(e.error.startswith("reduce: boom") for e in pd.entries)


@pytest.mark.asyncio
async def test_eks_on_singular_model_fails_per_port():
    model = random_rc_model(20, 2, seed=4, cap_free=2)
    pd = await reduce_all_ports(model, "eks", k=2)
    assert pd.failed_ports == [0, 1]
    assert "E is singular" in pd.entries[0].error
    mm = await reduce_all_ports(model, "mm", k=2)
    assert mm.failed_ports == []


@pytest.mark.asyncio
async def test_unknown_method_and_bad_k(model):
    service = SuperpositionService(model)
    with pytest.raises(ReductionError) as exc:
        await service.reduce_all_ports("prima", 2)
    assert exc.value.stage == "config"
    with pytest.raises(ReductionError):
        await service.reduce_all_ports("mm", 0)


@pytest.mark.asyncio
@pytest.mark.parametrize("method", ["mm", "eks"])
async def test_full_order_superposition_reproduces_transfer(method):
    model = random_rc_model(6, 2, seed=8)
    pd = await reduce_all_ports(model, method, k=6)
    grid = FrequencyGrid.log_spaced(1e-1, 1e1, 5)
    H, flags = assemble_H(pd, grid)
    assert flags == {}
    for index, s in enumerate(grid.s):
        assert relative(H[index], model_transfer(model, s)) < 1e-8


@pytest.mark.asyncio
async def test_superposition_over_regularized_model():
    model = mesh_model(3, 4, ports=2, seed=5, inductance=1.0, cap_free=1, pads=2)
    pm = regularize_service.detect_and_partition(model)
    pd = await reduce_all_ports(pm, "eks", k=pm.order)
    grid = FrequencyGrid.log_spaced(1e-1, 1e1, 4)
    H, _ = assemble_H(pd, grid)
    for index, s in enumerate(grid.s):
        assert relative(H[index], model_transfer(model, s)) < 1e-7


@pytest.mark.asyncio
async def test_columns_carry_their_own_feedthrough(grid):
    model = DescriptorModel(
        G=np.eye(2), C=np.eye(2), M=np.zeros((0, 0)), W=np.zeros((2, 0)),
        B1=np.eye(2), L1=np.eye(2), D=np.array([[0.0, 2.0], [3.0, 0.0]]),
    )
    pd = await reduce_all_ports(model, "mm", k=2)
    H, _ = assemble_H(pd, grid)
    s = grid.s[0]
    expected = np.eye(2) / (s + 1.0) + model.D.toarray()
    assert np.allclose(H[0], expected)


def test_assemble_H_flags_singular_points(grid):
    rom = ReducedModel(E=[[1.0]], A=[[-1.0]], B=[[1.0]], L=[[1.0]], D=[[0.0]], method="mm", k=1, port=0)
    pd = PortDecomposition(method="mm", k=1, p=1, q=1, entries=[PortResult(port=0, rom=rom)])
    bad = grid.s[3]
    transfer = ReducedModel.transfer

    def singular_at_bad(self, s):
        if s == bad:
            raise np.linalg.LinAlgError("singular reduced pencil")
        return transfer(self, s)

    with patch.object(ReducedModel, "transfer", singular_at_bad):
        H, flags = assemble_H(pd, grid)

    assert list(flags) == [3]
    assert np.isnan(H[3]).all()
    assert np.isfinite(H[np.arange(grid.count) != 3]).all()
    assert response_set(pd, grid).flags == {}


def test_assemble_H_refuses_missing_ports(grid):
    pd = PortDecomposition(
        method="eks", k=2, p=2, q=2,
        entries=[PortResult(port=0, error="reduce: failed"), PortResult(port=1, error="reduce: failed")],
    )
    with pytest.raises(ReductionError):
        assemble_H(pd, grid)


@pytest.mark.asyncio
async def test_reduction_is_deterministic(model):
    first = await reduce_all_ports(model, "eks", k=3, workers=1)
    second = await reduce_all_ports(model, "eks", k=3, workers=4)
    for a, b in zip(first.roms, second.roms):
        assert np.array_equal(a.A, b.A)
        assert np.array_equal(a.B, b.B)


@pytest.mark.asyncio
async def test_port_permutation_permutes_H(model, grid):
    perm = [2, 0, 1]
    H, _ = assemble_H(await reduce_all_ports(model, "mm", k=2), grid)
    H_perm, _ = assemble_H(await reduce_all_ports(permuted_ports(model, perm), "mm", k=2), grid)
    assert np.allclose(H_perm, H[:, perm][:, :, perm], rtol=1e-9, atol=1e-12)


@pytest.mark.asyncio
async def test_keep_bases(model):
    pd = await SuperpositionService(model).reduce_all_ports("mm", 2, keep_bases=True)
    assert all(e.basis is not None and e.basis.d == e.rom.r for e in pd.entries)
    pd = await SuperpositionService(model).reduce_all_ports("mm", 2, ports=[1])
    assert [e.port for e in pd.entries] == [1]
    assert pd.entries[0].basis is None
