import os
import pathlib
import shutil
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]

# An explicit build directory wins; otherwise prefer an installed package and
# fall back to the in-tree build layout.
if "HNNKWS_PYTHON_DIR" in os.environ:
    sys.path.insert(0, os.environ["HNNKWS_PYTHON_DIR"])
else:
    try:
        import hnnkws  # noqa: F401
    except ImportError:
        sys.path.insert(0, str(ROOT / "build" / "python"))

def _cli_path():
    explicit = os.environ.get("HNNKWS_CLI")
    if explicit:
        return explicit
    in_tree = ROOT / "build" / "tools" / "hnnkws"
    if in_tree.exists():
        return str(in_tree)
    return shutil.which("hnnkws")


@pytest.fixture(scope="session")
def cli():
    path = _cli_path()
    if path is None:
        pytest.skip("hnnkws executable not found; set HNNKWS_CLI")
    return path


@pytest.fixture(scope="session")
def tiny_config():
    return {
        "seed": 3,
        "corpus": {"utts_per_env": 20, "test_hours": 0.03},
        "topology": {
            "name": "tiny",
            "levels": [
                {"ah": [8], "bn": 4, "bh": [8]},
                {"ah": [8], "bn": 4, "bh": [8]},
                {"ah": [8]},
            ],
        },
        "train": {"epochs": 1, "frame_stride": 4},
        "strategies": ["third", "any", "avg"],
    }
