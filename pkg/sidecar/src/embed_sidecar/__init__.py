"""Sentence-embedding HTTP sidecar.

Serves the embedding-provider wire protocol:

* ``GET /info`` -> ``{"model": str, "dim": int}``
* ``POST /embed`` with ``{"texts": [str, ...]}`` ->
  ``{"model": str, "dim": int, "vectors": [[float, ...], ...]}``

Vectors are L2-normalized server-side so every client sees unit rows.
"""

from .app import Settings, create_app
from .backends import BackendLoadError, HashedBackend, SbertBackend, load_backend

__version__ = "0.1.0"

__all__ = [
    "BackendLoadError",
    "HashedBackend",
    "SbertBackend",
    "Settings",
    "create_app",
    "load_backend",
]
