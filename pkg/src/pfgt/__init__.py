"""Second-grade phase-field models: Swift-Hohenberg and phase-field-crystal.

The subpackages cover the constitutive closures, finite-difference and
spectral evolution on periodic and bounded grids, wall closures and surface
tractions, configurational forces, diagnostics and the ``pfgt`` command line.
"""

__version__ = "0.1.0"
