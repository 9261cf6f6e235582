"""Numerical evidence for closed range of dbar on planar domains.

Modules: geometry (scenes), logcap (logarithmic capacity), spectral (Dirichlet
eigenvalues), inradius (capacity inradius), witness (subharmonic witnesses),
classify (theorem-level verdicts) and cli.
"""

__version__ = "0.1.0"
