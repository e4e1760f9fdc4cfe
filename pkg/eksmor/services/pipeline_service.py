"""Load, assemble, regularize and reduce: the stages shared by the CLI commands."""
import os
import time
from contextlib import contextmanager
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from eksmor.core.config import settings
from eksmor.core.exceptions import ConfigError, RepositoryError, ReductionError
from eksmor.core.logger import logger
from eksmor.models.circuit import Circuit
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.reduction import PortDecomposition
from eksmor.repositories.model_repository import ModelRepository
from eksmor.repositories.rom_repository import INDEX, RomRepository
from eksmor.schemas.manifests import PortFailure, RegularizationInfo, RomIndex, RunRecord, RunTimings
from eksmor.schemas.run_config import RunConfig
from eksmor.services import netlist_service, regularize_service
from eksmor.services.krylov_service import ReducibleSystem, as_system
from eksmor.services.superpose_service import SuperpositionService


class PreparedModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: DescriptorModel
    circuit: Optional[Circuit] = None
    partitioned: Any = None
    system: Any
    regularization: RegularizationInfo
    timings: RunTimings = Field(default_factory=RunTimings)
    warnings: List[str] = Field(default_factory=list)


def select_ports(model: DescriptorModel, names: Sequence[str]) -> DescriptorModel:
    missing = [name for name in names if name not in model.port_names]
    if missing:
        raise ConfigError(f"unknown ports: {', '.join(missing[:10])}")
    index = [model.port_names.index(name) for name in names]
    return DescriptorModel(
        G=model.G, C=model.C, M=model.M, W=model.W,
        B1=model.B1[:, index], L1=model.L1[index], D=model.D[index][:, index],
        node_names=model.node_names, port_names=list(names),
    )


class PipelineService:
    def __init__(self, config: RunConfig):
        self.config = config
        self.timings = RunTimings()
        self.warnings: List[str] = []

    @contextmanager
    def stage(self, name: str):
        started = time.perf_counter()
        try:
            yield
        finally:
            self.timings.stages[name] = time.perf_counter() - started
            logger.info(f"Stage {name}: {self.timings.stages[name]:.3f}s")

    def load(self) -> Tuple[DescriptorModel, Optional[Circuit]]:
        cfg = self.config
        if not cfg.input:
            raise ConfigError("no input given")
        ports = netlist_service.read_port_file(cfg.ports_file) if cfg.ports_file else None

        if cfg.format == "mm-dir":
            if cfg.add_cap is not None or cfg.cap_skip:
                raise ConfigError("capacitance augmentation needs a netlist input")
            with self.stage("load"):
                model = ModelRepository(cfg.input).load()
            if ports is not None:
                model = select_ports(model, ports)
            return model, None

        with self.stage("parse"):
            try:
                circuit = netlist_service.load_netlist(cfg.input, ports=ports)
            except OSError as e:
                raise ReductionError(f"cannot read {cfg.input}: {e}", stage="parse")
        self.warnings.extend(circuit.warnings)
        if cfg.add_cap is not None or cfg.cap_skip:
            value = cfg.add_cap if cfg.add_cap is not None else settings.ADD_CAP_VALUE
            circuit = netlist_service.augment_capacitance(circuit, value, cfg.seed, cfg.cap_skip)
        with self.stage("assemble"):
            model = netlist_service.assemble_mna(circuit)
        return model, circuit

    def regularize(self, model: DescriptorModel) -> Tuple[Any, ReducibleSystem, RegularizationInfo]:
        with self.stage("regularize"):
            if model.m == 0 and len(regularize_service.capacitance_free_nodes(model)) == model.n:
                # purely resistive: no dynamic state survives elimination
                self.warnings.append("model has no capacitance or inductance, reduced unregularized")
                logger.warning(self.warnings[-1])
                return None, as_system(model), RegularizationInfo(applied=False)
            partitioned = regularize_service.detect_and_partition(model)
            if isinstance(partitioned, str):
                return None, as_system(model), RegularizationInfo(applied=False)
            self.warnings.extend(partitioned.warnings)
            info = RegularizationInfo(
                applied=True,
                n1=partitioned.n1,
                n2=partitioned.n2,
                m=partitioned.m,
                eliminated_nodes=partitioned.eliminated_nodes,
            )
            return partitioned, as_system(partitioned), info

    def prepare(self, model: Optional[DescriptorModel] = None) -> PreparedModel:
        circuit = None
        if model is None:
            model, circuit = self.load()
        if model.p < 1:
            raise ReductionError("model has no input ports", stage="assemble")
        partitioned, system, info = self.regularize(model)
        return PreparedModel(
            model=model,
            circuit=circuit,
            partitioned=partitioned,
            system=system,
            regularization=info,
            timings=self.timings,
            warnings=list(self.warnings),
        )

    async def reduce(
        self,
        prepared: PreparedModel,
        method: str,
    ) -> Tuple[PortDecomposition, RomIndex]:
        resolved = self.config.resolve(method)
        for warning in resolved.warnings:
            logger.warning(warning)
        with self.stage(f"reduce_{method}"):
            service = SuperpositionService(prepared.system, self.config.workers)
            pd = await service.reduce_all_ports(method, resolved.k)
        self.timings.port_seconds[method] = [e.seconds for e in pd.entries]

        warnings = list(resolved.warnings)
        for entry in pd.entries:
            warnings.extend(f"port {entry.port}: {w}" for w in entry.warnings)
        index = RomIndex(
            source=self.config.input,
            method=method,
            k=resolved.k,
            rom_order=resolved.rom_order,
            p=pd.p,
            q=pd.q,
            original_order=prepared.model.order,
            regularization=prepared.regularization,
            failures=[PortFailure(port=e.port, error=e.error) for e in pd.entries if e.rom is None],
            run=self.run_record(method),
            model_warnings=prepared.warnings,
            warnings=warnings,
        )
        return pd, index

    def run_record(self, method: str) -> RunRecord:
        values = self.config.model_dump(include=set(RunRecord.model_fields))
        values["method"] = method
        return RunRecord(**values)

    def load_existing(self, directory: str, method: str) -> Optional[Tuple[PortDecomposition, RomIndex]]:
        """ROMs an earlier run saved in `directory` with the same settings, or None."""
        if not os.path.exists(os.path.join(directory, INDEX)):
            return None
        try:
            pd, index = RomRepository(directory).load()
        except RepositoryError as e:
            logger.warning(f"Ignoring unreadable ROMs in {directory}: {e}")
            return None
        if index.run != self.run_record(method):
            logger.info(f"ROMs in {directory} were built with other settings, rebuilding")
            return None
        logger.info(f"Reusing {len(index.ports)} {method} ROMs from {directory}")
        return pd, index

    def summary_timings(self) -> Dict[str, Optional[float]]:
        result: Dict[str, Optional[float]] = dict(self.timings.stages)
        for method in self.timings.port_seconds:
            result[f"{method}_port_mean"] = self.timings.port_mean(method)
            result[f"{method}_port_total"] = self.timings.port_total(method)
        return result
