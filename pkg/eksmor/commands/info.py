from typing import Any, Dict

from eksmor.schemas.run_config import RunConfig
from eksmor.services import regularize_service
from eksmor.services.pipeline_service import PipelineService


async def cmd_info(cfg: RunConfig) -> Dict[str, Any]:
    model, _ = PipelineService(cfg).load()
    zero_cap = regularize_service.capacitance_free_nodes(model)
    info = {
        "n": model.n,
        "m": model.m,
        "p": model.p,
        "q": model.q,
        "N": model.order,
        "nnz_G": int(model.G.nnz),
        "nnz_C": int(model.C.nnz),
        "nnz_W": int(model.W.nnz),
        "capacitance_free_nodes": int(len(zero_cap)),
        "regularization": "applied" if len(zero_cap) else "not needed",
    }
    for key, value in info.items():
        print(f"{key:>24}: {value}")
    return info
