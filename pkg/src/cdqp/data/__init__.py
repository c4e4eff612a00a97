"""Bundled problem documents."""

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent


def problem_path(name: str = "small_dense") -> Path:
    """Filesystem path of a bundled ``.qp`` document."""
    path = DATA_DIR / f"{name}.qp"
    if not path.exists():
        available = sorted(p.stem for p in DATA_DIR.glob("*.qp"))
        raise FileNotFoundError(f"no bundled problem {name!r}; available: {available}")
    return path
