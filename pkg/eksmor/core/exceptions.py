from typing import Optional, Sequence


class ReductionError(Exception):
    """Base error of the reduction pipeline.

    `stage` names the pipeline step that failed (parse, assemble, regularize,
    reduce, analyze, io, config) and `detail` carries the human-readable
    cause. The CLI prints both and exits nonzero.
    """

    stage = "reduce"

    def __init__(self, detail: str, stage: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        if stage is not None:
            self.stage = stage

    def __str__(self) -> str:
        return f"{self.stage}: {self.detail}"


class NetlistParseError(ReductionError):
    stage = "parse"

    def __init__(self, detail: str, line_number: Optional[int] = None):
        if line_number is not None:
            detail = f"line {line_number}: {detail}"
        super().__init__(detail)
        self.line_number = line_number


class ElementValueError(NetlistParseError):
    pass


class DimensionMismatchError(ReductionError):
    pass


class SingularMatrixError(ReductionError):
    def __init__(
        self,
        detail: str,
        pivot: float = 0.0,
        columns: Sequence[int] = (),
        nodes: Sequence[str] = (),
        stage: Optional[str] = None,
    ):
        if nodes:
            detail = f"{detail} (nodes: {', '.join(nodes)})"
        elif columns:
            detail = f"{detail} (columns: {', '.join(str(c) for c in columns)})"
        super().__init__(detail, stage=stage)
        self.pivot = pivot
        self.columns = list(columns)
        self.nodes = list(nodes)


class CapacitanceError(ReductionError):
    def __init__(self, detail: str, nodes: Sequence[str] = ()):
        if nodes:
            shown = ", ".join(list(nodes)[:10])
            more = f" and {len(nodes) - 10} more" if len(nodes) > 10 else ""
            detail = f"{detail}: {shown}{more}"
        super().__init__(detail)
        self.nodes = list(nodes)


class DenseCapExceededError(ReductionError):
    def __init__(self, size: int, cap: int, what: str = "dense matrix"):
        super().__init__(f"{what} of order {size} exceeds the dense cap {cap}")
        self.size = size
        self.cap = cap


class EmptyBasisError(ReductionError):
    pass


class ConfigError(ReductionError):
    stage = "config"


class RepositoryError(ReductionError):
    stage = "io"
