# scalewave/state.py
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


def get_app_dir() -> Path:
    """
    Resolve the project root directory.
    - Frozen executable: folder containing it
    - Source run: project root (src/..)
    """
    if getattr(sys, "frozen", False):
        return Path(sys.executable).parent
    return Path(__file__).resolve().parents[2]


@dataclass(slots=True)
class RunState:
    """
    Where one run reads and writes.

    base_dir anchors relative paths from a config file; artifact_dir holds every
    file a command produces.
    """
    base_dir: Path = field(default_factory=get_app_dir)
    artifact_dir: Optional[Path] = None

    library_path: Path = field(init=False)
    filters_path: Path = field(init=False)
    checkpoint_path: Path = field(init=False)
    trace_path: Path = field(init=False)
    scores_path: Path = field(init=False)
    report_path: Path = field(init=False)
    report_table_path: Path = field(init=False)
    equity_path: Path = field(init=False)
    segmentation_path: Path = field(init=False)
    tokens_path: Path = field(init=False)

    def __post_init__(self) -> None:
        self.base_dir = Path(self.base_dir).resolve()
        if self.artifact_dir is None:
            self.artifact_dir = self.base_dir / "artifacts"
        self.artifact_dir = self.resolve(self.artifact_dir)

        self.library_path = self.artifact_dir / "library.json"
        self.filters_path = self.artifact_dir / "filters.json"
        self.checkpoint_path = self.artifact_dir / "checkpoint.json"
        self.trace_path = self.artifact_dir / "trace.csv"
        self.scores_path = self.artifact_dir / "scores.csv"
        self.report_path = self.artifact_dir / "report.json"
        self.report_table_path = self.artifact_dir / "report.txt"
        self.equity_path = self.artifact_dir / "equity.csv"
        self.segmentation_path = self.artifact_dir / "segmentation.csv"
        self.tokens_path = self.artifact_dir / "tokens.csv"

    def ensure_dirs(self) -> None:
        self.artifact_dir.mkdir(parents=True, exist_ok=True)

    # -------------------------
    # Path normalization (portability)
    # -------------------------

    def resolve(self, p: str | Path) -> Path:
        """Relative paths are taken against base_dir."""
        path = Path(str(p).strip())
        if not path.is_absolute():
            path = self.base_dir / path
        return path.resolve()

    def relative(self, p: str | Path) -> str:
        """Path under base_dir as a relative string; other paths unchanged."""
        path = Path(p).resolve()
        try:
            return str(path.relative_to(self.base_dir))
        except ValueError:
            return str(path)
