import sys

from typing import Dict, Any

# Repository root, so nlrabi imports without installation.
sys.path.append('../../')

from nlrabi.project_metadata import NAME, VERSION, AUTHOR, DESCRIPTION  # noqa: E402

# Configuration file for the Sphinx documentation builder.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------

project = NAME
copyright = f'2026, {AUTHOR}'
author = AUTHOR
release = VERSION
version = '.'.join(VERSION.split('.')[:2])

# -- General configuration ---------------------------------------------------

extensions = [
    'myst_parser',
    'autoapi.extension',
    'sphinx.ext.duration',
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon'
]

# The landing page includes README.md, which is MyST markdown.
source_suffix = {'.md': 'markdown', '.rst': 'restructuredtext'}
myst_heading_anchors = 3

# API pages for the nlrabi package; the CLI entry module and the logging queue holder carry no public API.
autoapi_dirs = ['../../nlrabi']
autoapi_ignore = ['*/globals.py', '*/__main__.py']
autoapi_options = ['members', 'undoc-members', 'show-inheritance', 'show-module-summary', 'imported-members']
autoapi_python_class_content = 'both'
autoapi_member_order = 'groupwise'
autodoc_typehints = 'description'

# Docstrings follow the Google style (Args/Returns/Raises).
napoleon_google_docstring = True
napoleon_numpy_docstring = False

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# -- Options for HTML output -------------------------------------------------

html_theme = 'furo'
html_title = f'{NAME} {VERSION}'
html_static_path = ['_static']

html_theme_options: Dict[str, Any] = {
    'announcement': DESCRIPTION,
    'navigation_with_keys': True,
}
