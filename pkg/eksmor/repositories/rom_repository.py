import json
import os
from typing import List, Optional, Tuple

from pydantic import ValidationError

from eksmor.core.exceptions import RepositoryError
from eksmor.core.logger import logger
from eksmor.models.reduction import PortDecomposition, PortResult, ReducedModel
from eksmor.repositories.matrix_market import read_matrix, write_matrix
from eksmor.schemas.manifests import RomIndex, RomManifest

INDEX = "index.json"
MANIFEST = "manifest.json"


def port_directory(port: int) -> str:
    return f"port_{port:03d}"


def _read_json(path: str, schema):
    try:
        with open(path, "r") as f:
            return schema(**json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise RepositoryError(f"cannot read {path}: {e}")


def _write_json(path: str, document):
    with open(path, "w") as f:
        f.write(document.model_dump_json(indent=2))


class RomRepository:
    """One directory per port ROM ({E,A,B,L,D}.mtx + manifest.json) and an index."""

    def __init__(self, root: str):
        self.root = root

    def save(self, pd: PortDecomposition, index: RomIndex, port_names: Optional[List[str]] = None):
        os.makedirs(self.root, exist_ok=True)
        directories = []
        for entry in sorted(pd.entries, key=lambda e: e.port):
            if entry.rom is None:
                continue
            directory = os.path.join(self.root, port_directory(entry.port))
            os.makedirs(directory, exist_ok=True)
            rom = entry.rom
            for name in ("E", "A", "B", "L", "D"):
                write_matrix(directory, name, getattr(rom, name))
            manifest = RomManifest(
                method=rom.method,
                k=rom.k,
                effective_k=entry.effective_k,
                port=entry.port,
                port_name=port_names[entry.port] if port_names else None,
                r=rom.r,
                original_order=rom.original_order,
                orthogonality_error=entry.orthogonality_error,
                breakdown=entry.breakdown,
                run=index.run,
                model_warnings=index.model_warnings,
                warnings=entry.warnings,
            )
            _write_json(os.path.join(directory, MANIFEST), manifest)
            directories.append(port_directory(entry.port))
        index = index.model_copy(update={"ports": directories})
        _write_json(os.path.join(self.root, INDEX), index)
        logger.info(f"Saved {len(directories)} {pd.method} ROMs to {self.root}")
        return index

    def load_rom(self, directory: str, q: int) -> Tuple[ReducedModel, RomManifest]:
        manifest = _read_json(os.path.join(directory, MANIFEST), RomManifest)
        r = manifest.r
        shapes = {"E": (r, r), "A": (r, r), "B": (r, 1), "L": (q, r), "D": (q, 1)}
        blocks = {
            name: read_matrix(directory, name, shape, dense=True) for name, shape in shapes.items()
        }
        rom = ReducedModel(
            **blocks,
            method=manifest.method,
            k=manifest.k,
            port=manifest.port,
            original_order=manifest.original_order,
        )
        return rom, manifest

    def load(self) -> Tuple[PortDecomposition, RomIndex]:
        index = _read_json(os.path.join(self.root, INDEX), RomIndex)
        entries = []
        for name in index.ports:
            rom, manifest = self.load_rom(os.path.join(self.root, name), index.q)
            entries.append(
                PortResult(
                    port=manifest.port,
                    rom=rom,
                    orthogonality_error=manifest.orthogonality_error,
                    effective_k=manifest.effective_k,
                    breakdown=manifest.breakdown,
                    warnings=manifest.warnings,
                )
            )
        for failure in index.failures:
            entries.append(PortResult(port=failure.port, error=failure.error))
        entries.sort(key=lambda e: e.port)
        pd = PortDecomposition(method=index.method, k=index.k, p=index.p, q=index.q, entries=entries)
        return pd, index
