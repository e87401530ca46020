"""Loader for the committed domain meshes (generated offline by
scripts/generate_fixtures.py)."""

from importlib import resources

from .meshes import read_mesh


def load(name):
    """Load a packaged mesh by stem name, e.g. 'trochoid'."""
    ref = resources.files("smsfem") / "fixtures" / (name + ".mesh")
    with resources.as_file(ref) as path:
        return read_mesh(path)
