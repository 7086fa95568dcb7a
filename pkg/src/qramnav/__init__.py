"""Radar resource management with radar-based self-localisation.

Submodules: :mod:`qram` (allocation), :mod:`radar`, :mod:`nav`, :mod:`tracking`,
:mod:`managers`, :mod:`scenario`, :mod:`sim` and :mod:`cli`.
"""

__version__ = "0.1.0"
