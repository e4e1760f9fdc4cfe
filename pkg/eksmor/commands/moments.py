from typing import List

import numpy as np

from eksmor.repositories.report_repository import ReportRepository
from eksmor.schemas.report import MomentRow
from eksmor.schemas.run_config import RunConfig
from eksmor.services import krylov_service
from eksmor.services.pipeline_service import PipelineService


def relative_deviation(value: np.ndarray, reference: np.ndarray) -> float:
    scale = np.linalg.norm(reference)
    difference = np.linalg.norm(value - reference)
    return float(difference / scale) if scale > 0 else float(difference)


async def cmd_moments(cfg: RunConfig) -> List[MomentRow]:
    out = cfg.ensure_output_dir()
    pipeline = PipelineService(cfg)
    prepared = pipeline.prepare()
    i_max = cfg.target_order

    original = krylov_service.moments(prepared.model, i_max, cap=cfg.dense_oracle_cap)
    rows: List[MomentRow] = []
    for port in range(prepared.model.p):
        for i, M in enumerate(original):
            rows.append(MomentRow(index=i, source="original", port=port, value=M[:, port].tolist()))

    for method in cfg.methods:
        pd, _ = await pipeline.reduce(prepared, method)
        for entry in pd.entries:
            if entry.rom is None:
                continue
            for i, M in enumerate(krylov_service.rom_moments(entry.rom, i_max)):
                reference = original[i][:, entry.port]
                rows.append(
                    MomentRow(
                        index=i,
                        source=method,
                        port=entry.port,
                        value=M[:, 0].tolist(),
                        relative_deviation=relative_deviation(M[:, 0], reference),
                    )
                )

    ReportRepository(out).save_rows("moments.csv", rows)
    print(f"{'i':>3} {'port':>5} {'source':>9} {'norm':>14} {'rel. dev.':>12}")
    for row in rows:
        deviation = "" if row.relative_deviation is None else f"{row.relative_deviation:.3e}"
        print(
            f"{row.index:>3} {row.port:>5} {row.source:>9} "
            f"{np.linalg.norm(row.value):>14.6e} {deviation:>12}"
        )
    return rows
