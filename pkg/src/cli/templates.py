from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined

# report templates for the bounds and repro commands
templates = Environment(
    loader=FileSystemLoader(Path(__file__).parent / "templates"),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)
