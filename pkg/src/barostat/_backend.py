"""Backend selection for the time-stepping kernels.

BAROSTAT_NUMBA controls which kernel set runs:
  unset / "auto"  use the compiled kernels when numba imports cleanly
  "1" "on" ...    require the compiled kernels (import errors propagate)
  "0" "off" ...   force the pure-numpy kernels

Both backends implement the same arithmetic; the test suite cross-checks
them step for step.
"""

import os

_OFF = ("0", "false", "off", "no")
_ON = ("1", "true", "on", "yes", "force")


def requested() -> str:
    return os.environ.get("BAROSTAT_NUMBA", "auto").strip().lower()


def use_numba() -> bool:
    v = requested()
    if v in _OFF:
        return False
    if v in _ON:
        import numba  # noqa: F401  deliberate hard failure when forced

        return True
    try:
        import numba  # noqa: F401

        return True
    except Exception:
        return False
