"""Frequency response of original and reduced models and the error measures.

The original H(jw) = L (jwE - A)^-1 B + D is evaluated on the unpartitioned
MNA matrices through the real embedding

    [[-A, -wE], [wE, -A]] [Xr; Xi] = [B; 0],

one sparse factorization per grid point.
"""
import asyncio
from typing import Dict, Optional, Union

import numpy as np
import scipy.sparse as sp

from eksmor.core.config import settings
from eksmor.core.exceptions import ReductionError
from eksmor.core.logger import logger
from eksmor.models.analysis import ErrorReport, FrequencyGrid, MethodError, ResponseSet
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.reduction import PortDecomposition, ReducedModel
from eksmor.services import superpose_service
from eksmor.services.sparse_core import as_block, factorize


def transfer_original(model: DescriptorModel, omega: float) -> np.ndarray:
    """H(jw) for one angular frequency; raises ReductionError on a singular pencil."""
    A, E = model.A, model.E
    embedded = sp.bmat([[-A, -omega * E], [omega * E, -A]], format="csc")
    F = factorize(embedded)
    if F.singular:
        raise ReductionError(f"pencil is singular at w = {omega:.6e}", stage="analyze")
    B = as_block(model.B)
    solution = F.solve(np.vstack([B, np.zeros_like(B)]))
    X = solution[:model.order] + 1j * solution[model.order:]
    return model.L @ X + model.D.toarray()


async def eval_original(
    model: DescriptorModel,
    grid: FrequencyGrid,
    workers: Optional[int] = None,
) -> ResponseSet:
    semaphore = asyncio.Semaphore(max(1, workers or settings.MOR_WORKERS))
    H = np.full((grid.count, model.q, model.p), np.nan, dtype=complex)
    result = ResponseSet(grid=grid, original=H)

    async def run(index: int, omega: float):
        async with semaphore:
            try:
                H[index] = await asyncio.to_thread(transfer_original, model, omega)
            except ReductionError as e:
                logger.error(f"Original response at point {index} failed: {e}")
                result.flag(index, str(e))

    await asyncio.gather(*(run(i, w) for i, w in enumerate(grid.omega)))
    logger.info(f"Evaluated original response at {grid.count} points, {len(result.flags)} flagged")
    return result


def eval_reduced(
    reduced: Union[PortDecomposition, ReducedModel],
    grid: FrequencyGrid,
    method: Optional[str] = None,
) -> ResponseSet:
    if isinstance(reduced, PortDecomposition):
        result = superpose_service.response_set(reduced, grid)
        if method and method != reduced.method:
            result.reduced = {method: result.reduced[reduced.method]}
        return result

    H = np.full((grid.count, reduced.q, reduced.p), np.nan, dtype=complex)
    result = ResponseSet(grid=grid, reduced={method or reduced.method: H})
    for index, s in enumerate(grid.s):
        try:
            H[index] = reduced.transfer(s)
        except np.linalg.LinAlgError as e:
            result.flag(index, str(e))
    return result


def _difference(rs: ResponseSet, method: str) -> np.ndarray:
    if rs.original is None:
        raise ReductionError("original response missing", stage="analyze")
    if method not in rs.reduced:
        raise ReductionError(f"no reduced response for method {method!r}", stage="analyze")
    reduced = rs.reduced[method]
    if reduced.shape != rs.original.shape:
        raise ReductionError(
            f"{method} response has shape {reduced.shape}, original has {rs.original.shape}",
            stage="analyze",
        )
    return reduced - rs.original


def error_curve(rs: ResponseSet, method: str) -> np.ndarray:
    """Largest singular value of H~(jw) - H(jw) per grid point, NaN where flagged."""
    diff = _difference(rs, method)
    curve = np.full(rs.grid.count, np.nan)
    mask = rs.valid_mask()
    if mask.any():
        curve[mask] = np.linalg.norm(diff[mask], ord=2, axis=(1, 2))
    return curve


def max_error(rs: ResponseSet, method: str) -> float:
    mask = rs.valid_mask()
    if not mask.any():
        raise ReductionError("every grid point is flagged, no error can be reported", stage="analyze")
    return float(np.max(error_curve(rs, method)[mask]))


def entrywise_max_error(rs: ResponseSet, method: str) -> np.ndarray:
    """max over unflagged points of |H~_ij - H_ij|, one value per port pair."""
    mask = rs.valid_mask()
    if not mask.any():
        raise ReductionError("every grid point is flagged, no error can be reported", stage="analyze")
    return np.max(np.abs(_difference(rs, method)[mask]), axis=0)


def error_reduction(err_mm: float, err_eks: float) -> Optional[float]:
    """Percentage by which EKS-MM lowers the MM error; None when err_mm is zero."""
    if err_mm < 0 or err_eks < 0:
        raise ReductionError("errors must be nonnegative", stage="analyze")
    if err_mm == 0:
        logger.warning("MM error is zero, error reduction is not applicable")
        return None
    return 100.0 * (err_mm - err_eks) / err_mm


def build_report(rs: ResponseSet) -> ErrorReport:
    errors: Dict[str, MethodError] = {}
    for method in rs.reduced:
        errors[method] = MethodError(
            method=method,
            max_error=max_error(rs, method),
            entrywise_max=entrywise_max_error(rs, method),
            curve=error_curve(rs, method),
        )
    reduction = None
    if "mm" in errors and "eks" in errors:
        reduction = error_reduction(errors["mm"].max_error, errors["eks"].max_error)
    return ErrorReport(errors=errors, error_reduction_percentage=reduction, flags=dict(rs.flags))


def port_pair_curve(rs: ResponseSet, output: int, port: int) -> Dict[str, np.ndarray]:
    """Magnitude and absolute error columns for one (output, input) pair."""
    curve = {"omega": rs.grid.omega, "abs_H": np.abs(rs.original[:, output, port])}
    for method, H in rs.reduced.items():
        curve[f"abs_H_{method}"] = np.abs(H[:, output, port])
        curve[f"abs_err_{method}"] = np.abs(H[:, output, port] - rs.original[:, output, port])
    return curve
