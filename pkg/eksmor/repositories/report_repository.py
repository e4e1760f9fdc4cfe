import csv
import os
from typing import Dict, List

import numpy as np
from pydantic import BaseModel

from eksmor.core.logger import logger


class ReportRepository:
    """CSV curves and JSON summaries of a comparison run."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(self.root, exist_ok=True)

    def path(self, filename: str) -> str:
        return os.path.join(self.root, filename)

    def save_json(self, filename: str, document: BaseModel) -> str:
        path = self.path(filename)
        with open(path, "w") as f:
            f.write(document.model_dump_json(indent=2))
        return path

    def save_curve(self, filename: str, curve: Dict[str, np.ndarray]) -> str:
        path = self.path(filename)
        columns = list(curve)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in zip(*(curve[c] for c in columns)):
                writer.writerow([repr(float(value)) for value in row])
        logger.info(f"Wrote {path}")
        return path

    def save_rows(self, filename: str, rows: List[BaseModel]) -> str:
        path = self.path(filename)
        with open(path, "w", newline="") as f:
            writer = None
            for row in rows:
                record = row.model_dump()
                if writer is None:
                    writer = csv.DictWriter(f, fieldnames=list(record))
                    writer.writeheader()
                writer.writerow(record)
        return path
