"""The shipped example programs, discoverable by name.

Each ``.xc`` file starts with an optional ``// type: ...`` comment giving the
type of its entry point: the last ``def`` in the file, or the main
expression when the file has no definitions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

_TYPE_LINE = re.compile(r"^//\s*type:\s*(.+?)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class CorpusProgram:
    name: str
    source: str
    expected_type: Optional[str]
    path: Path

    def compile(self):
        from ..syntax.desugar import compile_source

        return compile_source(self.source, str(self.path))

    def entry(self) -> str:
        """Name of the definition whose type ``expected_type`` describes."""
        defs = self.compile().definitions
        return defs[-1] if defs else "main"


def corpus_dir() -> Path:
    return Path(str(resources.files(__package__).joinpath("corpus")))


def _read(path: Path) -> CorpusProgram:
    text = path.read_text()
    m = _TYPE_LINE.search(text)
    return CorpusProgram(path.stem, text, m.group(1) if m else None, path)


def corpus() -> list[CorpusProgram]:
    return [_read(p) for p in sorted(corpus_dir().glob("*.xc"))]


def load(name: str) -> CorpusProgram:
    path = corpus_dir() / f"{name}.xc"
    if not path.exists():
        known = ", ".join(p.name for p in corpus())
        raise KeyError(f"no corpus program {name!r} (known: {known})")
    return _read(path)
