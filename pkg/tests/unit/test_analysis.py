import numpy as np
import pytest
from pydantic import ValidationError

from eksmor.core.exceptions import ReductionError
from eksmor.models.analysis import FrequencyGrid, ResponseSet
from eksmor.models.reduction import ReducedModel
from eksmor.services import analysis_service as analysis
from eksmor.services.superpose_service import reduce_all_ports
from tests.factories import RC_DIVIDER, mesh_model, model_transfer, parse_model, random_rc_model, relative


def response(original, reduced, flags=None, omega=None):
    original = np.asarray(original, dtype=complex).reshape(-1, 1, 1)
    reduced = {m: np.asarray(v, dtype=complex).reshape(-1, 1, 1) for m, v in reduced.items()}
    omega = np.arange(1.0, len(original) + 1) if omega is None else omega
    return ResponseSet(grid=FrequencyGrid(omega=omega), original=original, reduced=reduced, flags=flags or {})


@pytest.mark.parametrize("omega", [[1.0], [1.0, 1.0], [2.0, 1.0], [1.0, np.inf]])
def test_grid_validation(omega):
    with pytest.raises(ValidationError):
        FrequencyGrid(omega=omega)


def test_log_spaced_grid():
    grid = FrequencyGrid.log_spaced(1.0, 1e12, 200)
    assert grid.count == 200
    assert grid.omega[0] == pytest.approx(1.0)
    assert grid.omega[-1] == pytest.approx(1e12)
    assert np.allclose(grid.s, 1j * grid.omega)
    with pytest.raises(ValueError):
        FrequencyGrid.log_spaced(0.0, 1.0, 10)


@pytest.mark.asyncio
async def test_one_pole_magnitude():
    model = parse_model(RC_DIVIDER)
    grid = FrequencyGrid(omega=[0.1, 1.0, 10.0])
    rs = await analysis.eval_original(model, grid, workers=2)
    assert rs.flags == {}
    assert np.allclose(np.abs(rs.original[:, 0, 0]), 1.0 / np.sqrt(1.0 + grid.omega ** 2))


def test_static_network_is_flat():
    model = parse_model("R1 1 0 2\nR2 1 2 1\nR3 2 0 1\nI1 1 0 1\n")
    values = [analysis.transfer_original(model, w) for w in (1.0, 1e3, 1e9)]
    for value in values:
        assert np.allclose(value, values[0])
    assert np.allclose(values[0], 2.0 * 2.0 / 4.0)


def test_embedding_matches_dense_oracle():
    model = mesh_model(4, 4, ports=2, seed=6, inductance=1e-2, cap_free=2)
    for omega in (0.3, 7.0, 300.0):
        assert relative(analysis.transfer_original(model, omega), model_transfer(model, 1j * omega)) < 1e-9


def test_transfer_is_conjugate_symmetric():
    model = random_rc_model(25, 2, seed=3)
    for omega in (0.5, 4.0):
        assert np.allclose(model_transfer(model, -1j * omega), np.conj(analysis.transfer_original(model, omega)))


def test_singular_pencil_is_reported():
    # floating resistor pair with no path to ground
    model = parse_model("R1 1 2 1\nI1 1 0 1\n")
    with pytest.raises(ReductionError) as exc:
        analysis.transfer_original(model, 1.0)
    assert exc.value.stage == "analyze"


def test_reduced_closed_form():
    rom = ReducedModel(E=[[2.0]], A=[[-3.0]], B=[[1.5]], L=[[0.5]], D=[[0.1]], method="eks", k=1)
    grid = FrequencyGrid(omega=[1.0, 2.0])
    rs = analysis.eval_reduced(rom, grid)
    expected = 0.5 * 1.5 / (2.0 * grid.s + 3.0) + 0.1
    assert np.allclose(rs.reduced["eks"][:, 0, 0], expected)


def test_max_error_is_largest_singular_value():
    grid = FrequencyGrid(omega=[1.0, 2.0])
    original = np.zeros((2, 2, 2), dtype=complex)
    reduced = original.copy()
    reduced[1] = np.diag([3.0, 4.0j])
    rs = ResponseSet(grid=grid, original=original, reduced={"mm": reduced})
    assert analysis.max_error(rs, "mm") == pytest.approx(4.0)
    assert np.allclose(analysis.error_curve(rs, "mm"), [0.0, 4.0])
    assert np.allclose(analysis.entrywise_max_error(rs, "mm"), [[3.0, 0.0], [0.0, 4.0]])


def test_identical_responses_have_zero_error():
    rs = response([1.0, 2.0, 3.0], {"mm": [1.0, 2.0, 3.0]})
    assert analysis.max_error(rs, "mm") == 0.0


def test_flagged_points_are_excluded():
    rs = response([1.0, 1.0, 1.0], {"mm": [1.0, 9.0, 1.5]}, flags={1: "singular"})
    assert analysis.max_error(rs, "mm") == pytest.approx(0.5)
    assert np.isnan(analysis.error_curve(rs, "mm")[1])


def test_fully_flagged_grid_raises():
    rs = response([1.0, 1.0], {"mm": [1.0, 1.0]}, flags={0: "a", 1: "b"})
    with pytest.raises(ReductionError):
        analysis.max_error(rs, "mm")


def test_missing_method_and_shape_mismatch():
    rs = response([1.0, 1.0], {"mm": [1.0, 1.0]})
    with pytest.raises(ReductionError):
        analysis.max_error(rs, "eks")
    rs.reduced["eks"] = np.zeros((2, 2, 1), dtype=complex)
    with pytest.raises(ReductionError):
        analysis.error_curve(rs, "eks")


@pytest.mark.parametrize("err_mm, err_eks, expected", [
    (0.037, 0.014, 62.16),
    (0.233, 0.038, 83.69),
    (1.0, 1.0, 0.0),
    (1.0, 2.0, -100.0),
])
def test_error_reduction(err_mm, err_eks, expected):
    assert analysis.error_reduction(err_mm, err_eks) == pytest.approx(expected, abs=1e-2)


def test_error_reduction_edge_cases():
    assert analysis.error_reduction(0.0, 0.0) is None
    with pytest.raises(ReductionError):
        analysis.error_reduction(-1.0, 0.5)


def test_build_report():
    rs = response([1.0, 1.0, 1.0], {"mm": [1.2, 1.0, 1.0], "eks": [1.05, 1.0, 1.0]})
    report = analysis.build_report(rs)
    assert report.errors["mm"].max_error == pytest.approx(0.2)
    assert report.errors["eks"].max_error == pytest.approx(0.05)
    assert report.error_reduction_percentage == pytest.approx(75.0)
    assert report.flags == {}


def test_report_without_both_methods_has_no_reduction():
    report = analysis.build_report(response([1.0, 1.0], {"eks": [1.0, 1.5]}))
    assert report.error_reduction_percentage is None


def test_merge_and_port_pair_curve():
    grid = FrequencyGrid(omega=[1.0, 10.0])
    original = ResponseSet(grid=grid, original=np.ones((2, 1, 1), dtype=complex), flags={0: "x"})
    reduced = ResponseSet(grid=grid, reduced={"mm": 2 * np.ones((2, 1, 1), dtype=complex)}, flags={0: "y"})
    merged = original.merge(reduced)
    assert merged.flags == {0: "x"}
    curve = analysis.port_pair_curve(merged, 0, 0)
    assert set(curve) == {"omega", "abs_H", "abs_H_mm", "abs_err_mm"}
    assert np.allclose(curve["abs_err_mm"], 1.0)


@pytest.mark.asyncio
async def test_error_on_nested_grid_is_bounded_by_fine_grid():
    model = random_rc_model(60, 2, seed=10)
    pd = await reduce_all_ports(model, "mm", k=2)
    fine = FrequencyGrid.log_spaced(1e-2, 1e2, 41)
    coarse = FrequencyGrid(omega=fine.omega[::4])

    async def error(grid):
        rs = await analysis.eval_original(model, grid)
        rs.merge(analysis.eval_reduced(pd, grid))
        return analysis.max_error(rs, "mm")

    assert await error(coarse) <= await error(fine) + 1e-15


@pytest.mark.asyncio
async def test_eval_reduced_renames_method():
    model = random_rc_model(20, 1, seed=1)
    pd = await reduce_all_ports(model, "eks", k=2)
    rs = analysis.eval_reduced(pd, FrequencyGrid(omega=[1.0, 2.0]), method="eks-k2")
    assert list(rs.reduced) == ["eks-k2"]
