"""Protocol checking, projection, conformance and synchronous simulation for
MPI-style programs.

The heavy lifting lives in the C++ extension; this package re-exports it.
"""

try:
    from ._partypes import *  # noqa: F401,F403  (wheel layout)
    from ._partypes import __doc__ as _doc
except ImportError:  # in-tree builds put the extension on PYTHONPATH
    from _partypes import *  # noqa: F401,F403
    from _partypes import __doc__ as _doc

__doc__ = _doc
__version__ = "0.1.0"
