import os
from typing import Dict

from eksmor.core.logger import logger
from eksmor.repositories.model_repository import ModelRepository
from eksmor.repositories.report_repository import ReportRepository
from eksmor.repositories.rom_repository import RomRepository
from eksmor.schemas.manifests import RomIndex
from eksmor.schemas.run_config import RunConfig
from eksmor.services.pipeline_service import PipelineService


async def cmd_reduce(cfg: RunConfig) -> Dict[str, RomIndex]:
    out = cfg.ensure_output_dir()
    pipeline = PipelineService(cfg)
    prepared = pipeline.prepare()

    indices: Dict[str, RomIndex] = {}
    for method in cfg.methods:
        pd, index = await pipeline.reduce(prepared, method)
        repository = RomRepository(os.path.join(out, "roms", method))
        indices[method] = repository.save(pd, index, prepared.model.port_names)

    if prepared.partitioned is not None:
        ModelRepository(out).save_permutation(prepared.partitioned)
    ReportRepository(out).save_json("timings.json", pipeline.timings)

    for name, seconds in pipeline.summary_timings().items():
        if seconds is not None:
            print(f"{name:>20}: {seconds:.3f}s")
    for warning in pipeline.warnings:
        print(f"warning: {warning}")
    for method, index in indices.items():
        print(f"{method}: k={index.k}, ROM order {index.rom_order}, {len(index.ports)}/{index.p} ports")
        for warning in index.warnings:
            print(f"  warning: {warning}")
    logger.info(f"Reduction results written to {out}")
    return indices
