# Sphinx configuration for the mesdopt documentation.

import mesdopt

project = "mesdopt"
copyright = "2024, the mesdopt authors"
author = "the mesdopt authors"
version = release = mesdopt.__version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "recommonmark",
]
source_suffix = {".rst": "restructuredtext", ".md": "markdown"}
master_doc = "index"
language = "en"
exclude_patterns = ["_build"]

# `name` in docstrings cross-references Python objects
default_role = "py:obj"
autoclass_content = "both"
autodoc_member_order = "groupwise"
autodoc_typehints = "description"
autodoc_typehints_description_target = "documented"
napoleon_google_docstring = True
napoleon_numpy_docstring = False

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
    "pandas": ("https://pandas.pydata.org/docs", None),
    "matplotlib": ("https://matplotlib.org/stable", None),
}

html_theme = "sphinx_rtd_theme"
htmlhelp_basename = "mesdoptdoc"
man_pages = [("index", "mesdopt", "mesdopt Documentation", [author], 1)]
