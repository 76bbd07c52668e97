import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from src import __version__


@dataclass
class RunManifest:
    """Everything needed to rerun a command. Holds no timestamps."""

    command: str
    options: dict = field(default_factory=dict)
    seed: int = None
    input_hashes: dict = field(default_factory=dict)
    tool_version: str = __version__

    def add_input(self, path):
        path = Path(path)
        files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
        for p in files:
            self.input_hashes[str(p)] = hashlib.sha256(p.read_bytes()).hexdigest()

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        return path
