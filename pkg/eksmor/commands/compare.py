import os
from typing import Dict

from eksmor.models.analysis import FrequencyGrid
from eksmor.repositories.report_repository import ReportRepository
from eksmor.repositories.rom_repository import RomRepository
from eksmor.schemas.report import ComparisonSummary, MethodSummary
from eksmor.schemas.run_config import RunConfig
from eksmor.services import analysis_service
from eksmor.services.pipeline_service import PipelineService


async def cmd_compare(cfg: RunConfig) -> ComparisonSummary:
    out = cfg.ensure_output_dir()
    pipeline = PipelineService(cfg)
    prepared = pipeline.prepare()
    model = prepared.model

    grid = FrequencyGrid.log_spaced(cfg.fmin, cfg.fmax, cfg.npoints)
    with pipeline.stage("eval_original"):
        responses = await analysis_service.eval_original(model, grid, cfg.workers)

    methods: Dict[str, MethodSummary] = {}
    warnings = list(prepared.warnings)
    for method in ("mm", "eks"):
        methods[method] = MethodSummary(method=method)
        if method not in cfg.methods:
            continue
        directory = os.path.join(out, "roms", method)
        existing = pipeline.load_existing(directory, method)
        if existing is None:
            pd, index = await pipeline.reduce(prepared, method)
            RomRepository(directory).save(pd, index, model.port_names)
        else:
            pd, index = existing
        warnings.extend(f"{method}: {w}" for w in index.warnings)
        methods[method] = MethodSummary(
            method=method,
            k=index.k,
            rom_order=index.rom_order,
            runtime_total=pipeline.timings.port_total(method),
            runtime_port_mean=pipeline.timings.port_mean(method),
            failed_ports=pd.failed_ports,
            reused=existing is not None,
        )
        if pd.failed_ports:
            warnings.append(f"{method}: ports {pd.failed_ports} failed, no error reported")
            continue
        responses.merge(analysis_service.eval_reduced(pd, grid))

    report = analysis_service.build_report(responses)
    for method, error in report.errors.items():
        methods[method].max_error = error.max_error
        methods[method].entrywise_max_error = error.entrywise_max.tolist()

    reports = ReportRepository(out)
    curve = {"omega": grid.omega}
    for method, error in report.errors.items():
        curve[f"sigma_max_err_{method}"] = error.curve
    reports.save_curve("error_curve.csv", curve)
    for port in range(min(model.p, model.q)):
        reports.save_curve(
            f"curve_{port}_{port}.csv", analysis_service.port_pair_curve(responses, port, port)
        )

    summary = ComparisonSummary(
        source=cfg.input,
        dimension=model.order,
        ports=model.p,
        outputs=model.q,
        regularization=prepared.regularization,
        fmin=cfg.fmin,
        fmax=cfg.fmax,
        npoints=cfg.npoints,
        methods=methods,
        error_reduction_percentage=report.error_reduction_percentage,
        flagged_points=report.flags,
        warnings=warnings,
    )
    reports.save_json("summary.json", summary)
    reports.save_json("timings.json", pipeline.timings)

    for method, entry in methods.items():
        shown = "n/a" if entry.max_error is None else f"{entry.max_error:.6e}"
        print(f"{method:>4}: order {entry.rom_order}, max error {shown}")
    if summary.error_reduction_percentage is not None:
        print(f"error reduction: {summary.error_reduction_percentage:.2f}%")
    return summary
