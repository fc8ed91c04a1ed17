master_doc = 'index'
extensions = [
    'sphinx.ext.napoleon',
    'sphinx.ext.autodoc',
]
project = 'powersurrogate'
napoleon_custom_sections = [('Returns', 'params_style')]
