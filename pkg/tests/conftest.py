from __future__ import annotations

from hypothesis import settings

# Shared-machine CI can be slow enough to trip hypothesis' per-example
# deadline; correctness here never depends on wall-clock time.
settings.register_profile("semindex", deadline=None)
settings.load_profile("semindex")
