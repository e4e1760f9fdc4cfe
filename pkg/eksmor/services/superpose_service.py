"""Per-port SIMO reduction and assembly of the superposed transfer matrix.

Each input port is reduced on its own; column i of the reduced transfer
matrix is the response of ROM i. Ports run concurrently in worker threads
that share the model's read-only factorizations.
"""
import asyncio
import time
from typing import Dict, Optional, Sequence, Tuple, Type, Union

import numpy as np

from eksmor.core.config import settings
from eksmor.core.exceptions import ReductionError
from eksmor.core.logger import logger
from eksmor.models.analysis import FrequencyGrid, ResponseSet
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.partitioned import PartitionedModel
from eksmor.models.reduction import PortDecomposition, PortResult
from eksmor.services.krylov_service import ReducibleSystem, as_system
from eksmor.services.reduction import STRATEGIES, ReductionStrategy


class SuperpositionService:
    def __init__(
        self,
        system: Union[DescriptorModel, PartitionedModel, ReducibleSystem],
        workers: Optional[int] = None,
    ):
        self.system = as_system(system)
        self.workers = max(1, workers or settings.MOR_WORKERS)
        self.strategies: Dict[str, ReductionStrategy] = {
            name: strategy() for name, strategy in STRATEGIES.items()
        }

    def strategy(self, method: str) -> ReductionStrategy:
        if method not in self.strategies:
            raise ReductionError(f"unknown reduction method {method!r}", stage="config")
        return self.strategies[method]

    def reduce_port(self, method: str, port: int, k: int, keep_basis: bool = False) -> PortResult:
        started = time.perf_counter()
        try:
            basis, rom = self.strategy(method).reduce(self.system, port, k)
        except ReductionError as e:
            logger.error(f"{method} reduction of port {port} failed: {e}")
            return PortResult(port=port, error=str(e), seconds=time.perf_counter() - started)
        except Exception as e:
            logger.error(f"Unexpected failure reducing port {port} with {method}: {e}")
            return PortResult(
                port=port, error=f"reduce: {e}", seconds=time.perf_counter() - started
            )

        seconds = time.perf_counter() - started
        orthogonality = basis.orthogonality_error()
        warnings = list(basis.warnings)
        if orthogonality > settings.ORTH_TOL:
            warnings.append(f"basis orthogonality error {orthogonality:.2e}")
            logger.warning(f"Port {port} ({method}): orthogonality error {orthogonality:.2e}")
        logger.info(
            f"Port {port} ({method}): order {rom.r}, effective k {basis.effective_k}, "
            f"{seconds:.3f}s"
        )
        return PortResult(
            port=port,
            rom=rom,
            basis=basis if keep_basis else None,
            orthogonality_error=orthogonality,
            effective_k=basis.effective_k,
            breakdown=basis.breakdown,
            warnings=warnings,
            seconds=seconds,
        )

    async def reduce_all_ports(
        self,
        method: str,
        k: int,
        ports: Optional[Sequence[int]] = None,
        keep_bases: bool = False,
    ) -> PortDecomposition:
        self.strategy(method)
        if k < 1:
            raise ReductionError(f"k must be at least 1, got {k}", stage="config")
        ports = list(range(self.system.p)) if ports is None else list(ports)
        semaphore = asyncio.Semaphore(self.workers)

        async def run(port: int) -> PortResult:
            async with semaphore:
                return await asyncio.to_thread(self.reduce_port, method, port, k, keep_bases)

        entries = await asyncio.gather(*(run(port) for port in ports))
        decomposition = PortDecomposition(
            method=method, k=k, p=self.system.p, q=self.system.q, entries=list(entries)
        )
        if decomposition.failed_ports:
            logger.warning(f"{method}: ports {decomposition.failed_ports} failed")
        return decomposition


async def reduce_all_ports(
    model: Union[DescriptorModel, PartitionedModel, ReducibleSystem],
    method: str,
    k: int,
    workers: Optional[int] = None,
    keep_bases: bool = False,
) -> PortDecomposition:
    return await SuperpositionService(model, workers).reduce_all_ports(
        method, k, keep_bases=keep_bases
    )


def assemble_H(pd: PortDecomposition, grid: FrequencyGrid) -> Tuple[np.ndarray, Dict[int, str]]:
    """H~(s) = [H~_1(s), ..., H~_p(s)] per grid point, shape (count, q, p).

    Each column carries its own column of D. Points where a shifted ROM
    pencil is singular are returned as flags and left as NaN.
    """
    if pd.failed_ports or len(pd.entries) != pd.p:
        raise ReductionError(
            f"cannot assemble H~ with ports {pd.failed_ports} missing", stage="analyze"
        )
    entries = sorted(pd.entries, key=lambda e: e.port)
    H = np.full((grid.count, pd.q, pd.p), np.nan, dtype=complex)
    flags: Dict[int, str] = {}
    for index, s in enumerate(grid.s):
        for entry in entries:
            try:
                H[index, :, entry.port] = entry.rom.transfer(s)[:, 0]
            except np.linalg.LinAlgError as e:
                flags.setdefault(index, f"port {entry.port}: {e}")
    if flags:
        logger.warning(f"{len(flags)} grid points flagged while assembling {pd.method} response")
    return H, flags


def response_set(pd: PortDecomposition, grid: FrequencyGrid) -> ResponseSet:
    H, flags = assemble_H(pd, grid)
    return ResponseSet(grid=grid, reduced={pd.method: H}, flags=flags)
