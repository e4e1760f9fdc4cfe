import os

from eksmor.core.logger import logger
from eksmor.repositories.model_repository import ModelRepository
from eksmor.schemas.run_config import SynthConfig
from eksmor.services import benchmark_service, netlist_service


async def cmd_synth(cfg: SynthConfig) -> str:
    if cfg.kind == "ladder":
        circuit = benchmark_service.rc_ladder(
            cfg.nodes, cfg.ports, cfg.seed, cap_free=cfg.cap_free, c_scale=cfg.c_scale
        )
    else:
        circuit = benchmark_service.rc_mesh(
            cfg.rows, cfg.cols, cfg.ports, cfg.seed,
            pads=cfg.pads,
            inductance=cfg.inductance if cfg.kind == "rlc" else 0.0,
            cap_free=cfg.cap_free,
            c_scale=cfg.c_scale,
            vsource_pads=cfg.vsource_pads,
        )

    if cfg.format == "mm-dir":
        ModelRepository(cfg.out).save(netlist_service.assemble_mna(circuit))
    else:
        directory = os.path.dirname(cfg.out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(cfg.out, "w") as f:
            f.write(netlist_service.write_netlist(circuit))
    logger.info(f"Wrote {cfg.kind} benchmark ({circuit.n} nodes) to {cfg.out}")
    print(f"{cfg.kind}: {circuit.n} nodes, {len(circuit.ports)} ports -> {cfg.out}")
    return cfg.out
