"""Sphinx configuration."""

# SPDX-License-Identifier: Apache-2.0

import os
import shutil

from lsv_metrology import __version__


def run_apidoc(app):
    """Generate doc stubs for lsv_metrology using sphinx-apidoc."""
    module_dir = os.path.join(app.srcdir, "../src/lsv_metrology")
    output_dir = os.path.join(app.srcdir, "_apidoc")

    if os.path.exists(output_dir):
        shutil.rmtree(output_dir)

    from sphinx.ext import apidoc

    apidoc.main(["--separate", "--module-first", "--doc-project=API Reference", "-o", output_dir, module_dir])


def setup(app):
    app.connect("builder-inited", run_apidoc)


project = "lsv-metrology"
release = __version__
version = ".".join(__version__.split(".")[:2])

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
}

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
]

source_suffix = ".rst"
master_doc = "index"

autoclass_content = "class"
autodoc_member_order = "bysource"
default_role = "py:obj"

html_theme = "sphinx_rtd_theme"
htmlhelp_basename = "{}doc".format(project)

napoleon_use_rtype = False
