import csv
import json
import os

from pydantic import ValidationError

from eksmor.core.exceptions import RepositoryError
from eksmor.core.logger import logger
from eksmor.models.descriptor import DescriptorModel
from eksmor.models.partitioned import PartitionedModel
from eksmor.repositories.matrix_market import read_matrix, write_matrix
from eksmor.schemas.manifests import ModelManifest

MANIFEST = "manifest.json"


class ModelRepository:
    """MNA blocks as Matrix Market files plus a JSON manifest in one directory."""

    def __init__(self, root: str):
        self.root = root

    def save(self, model: DescriptorModel) -> ModelManifest:
        os.makedirs(self.root, exist_ok=True)
        for name in ("G", "C", "M", "W", "B1", "L1", "D"):
            write_matrix(self.root, name, getattr(model, name))
        manifest = ModelManifest(
            n=model.n, m=model.m, p=model.p, q=model.q,
            node_names=model.node_names, port_names=model.port_names,
        )
        with open(os.path.join(self.root, MANIFEST), "w") as f:
            f.write(manifest.model_dump_json(indent=2))
        logger.info(f"Saved model (N={model.order}) to {self.root}")
        return manifest

    def load(self) -> DescriptorModel:
        path = os.path.join(self.root, MANIFEST)
        try:
            with open(path, "r") as f:
                manifest = ModelManifest(**json.load(f))
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise RepositoryError(f"cannot read model manifest {path}: {e}")
        n, m, p, q = manifest.n, manifest.m, manifest.p, manifest.q
        shapes = {
            "G": (n, n), "C": (n, n), "M": (m, m), "W": (n, m),
            "B1": (n, p), "L1": (q, n), "D": (q, p),
        }
        blocks = {name: read_matrix(self.root, name, shape) for name, shape in shapes.items()}
        try:
            model = DescriptorModel(
                **blocks, node_names=manifest.node_names, port_names=manifest.port_names
            )
        except ValidationError as e:
            raise RepositoryError(f"inconsistent model directory {self.root}: {e}")
        logger.info(f"Loaded model (N={model.order}) from {self.root}")
        return model

    def save_permutation(self, pm: PartitionedModel, filename: str = "permutation.csv") -> str:
        os.makedirs(self.root, exist_ok=True)
        path = os.path.join(self.root, filename)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["position", "node_index", "node_name", "block"])
            for position, index in enumerate(pm.permutation):
                name = pm.node_names[index] if pm.node_names else str(index)
                writer.writerow([position, int(index), name, 1 if position < pm.n1 else 2])
        return path
