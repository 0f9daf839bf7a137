"""Emitted model text plus its variable manifest."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..fileio import atomic_write_text

FORMATS = ("lp-milp", "lp-miqp", "cp-text")


@dataclass(frozen=True)
class VarInfo:
    name: str
    kind: str  # binary | integer | continuous
    indices: tuple[int, ...]


@dataclass(frozen=True)
class ModelText:
    format: str
    body: str
    manifest: list[VarInfo] = field(default_factory=list)

    @property
    def suffix(self) -> str:
        return ".cp" if self.format == "cp-text" else ".lp"

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.manifest:
            # x_3_4 and x3 both count as "x"
            prefix = v.name.split("_", 1)[0].rstrip("0123456789") or v.name
            out[prefix] = out.get(prefix, 0) + 1
        return out

    def manifest_tsv(self) -> str:
        rows = ["name\tkind\tindices"]
        rows += [f"{v.name}\t{v.kind}\t{','.join(map(str, v.indices))}" for v in self.manifest]
        return "\n".join(rows) + "\n"

    def write(self, path, manifest_path=None) -> None:
        atomic_write_text(Path(path), self.body)
        if manifest_path is not None:
            atomic_write_text(Path(manifest_path), self.manifest_tsv())
