import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from odeident import __version__  # noqa: E402

project = 'odeident'
version = release = __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx_click',
]

master_doc = 'index'
exclude_patterns = ['_build']
