# Sphinx configuration; project metadata and extensions come from pyproject.toml.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import sys
import warnings
from pathlib import Path

warnings.filterwarnings("ignore", category=DeprecationWarning, module="sphinx_autodoc_typehints")

from sphinx_pyproject import SphinxConfig  # noqa: E402

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))
config = SphinxConfig(str(ROOT / "pyproject.toml"), globalns=globals())

project = config.name
version = config.version
release = config.version
authors = config.get("authors") or [{"name": "chaoscluster developers"}]
author = authors[0]["name"] if isinstance(authors[0], dict) else str(authors[0])
copyright = config["copyright"]  # noqa: A001
project_copyright = copyright

extensions = [*config["extensions"], "sphinx.ext.mathjax"]
templates_path = config["templates_path"]
exclude_patterns = config["exclude_patterns"]
language = config["language"]

# numpy/scipy types in signatures link to their docs
intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}
autodoc_member_order = "bysource"
napoleon_google_docstring = True
typehints_fully_qualified = False

html_theme = config["html_theme"]
html_static_path = config["html_static_path"]
html_title = f"{project} {version}"
html_permalinks = True

suppress_warnings = ["ref.python", "app.add_directive.duplicate_object"]
