# -*- coding: utf-8 -*-
#
# DMMF engine documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

import dmmflib

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.ifconfig']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'DMMF Engine'
copyright = u'2024, The DMMF Engine Developers'

version = dmmflib.__version__
release = dmmflib.__version__

exclude_patterns = ['_build']

pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'

html_title = "DMMF Engine API Reference"

html_sidebars = {
   '**': ['globaltoc.html', 'searchbox.html'],
}

htmlhelp_basename = 'DMMFEnginedoc'

# -- Options for LaTeX output --------------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'DMMFEngine.tex', u'DMMF Engine Documentation',
   u'The DMMF Engine Developers', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'dmmf', u'DMMF Engine API Documentation',
     [u'The DMMF Engine Developers'], 1)
]

# -- Options for Texinfo output ------------------------------------------------

texinfo_documents = [
  ('index', 'DMMFEngine', u'DMMF Engine API Documentation',
   u'The DMMF Engine Developers', 'DMMFEngine', 'API reference for the DMMF engine.',
   'Miscellaneous'),
]

# Class docstrings and __init__ docstrings are both shown.
autoclass_content = 'both'
