#!/usr/bin/env python3
#
# smcflab documentation build configuration file.

import subprocess

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
]

source_suffix = '.rst'

# The master toctree document.
master_doc = 'index'

# General information about the project.
project = 'smcflab'
copyright = '2026, smcflab developers'
author = 'smcflab developers'

try:
    version = subprocess.check_output(['git', 'describe']).decode('utf-8')
except Exception:
    version = 'unknown'
# The full version, including alpha/beta/rc tags.
release = version

language = 'en'

exclude_patterns = []

pygments_style = 'sphinx'

todo_include_todos = False

# numpy types in signatures and docstrings are not cross referenced.
nitpicky = False

# -- Options for HTML output ----------------------------------------------

html_theme = 'default'

htmlhelp_basename = 'smcflabdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'smcflab', 'smcflab Documentation',
     [author], 1)
]
