"""Wall conditions, ghost closures and microtractions."""

from .closures import (
    ChemPot,
    Essential,
    Flux,
    Mixed,
    MixedMass,
    Natural,
    PfcBoundary,
    PfcClosure,
    PfcGhosts,
    ShBoundary,
    ShClosure,
    enforce_essential,
    face_geometry,
    faces_of,
    ghost_closure_pfc,
    ghost_closure_sh,
    natural_tractions,
)
from .tractions import (
    EdgeFrame,
    OrientedSurfacePatch,
    edge_microtractions,
    hypermicrotraction,
    isotropic_tractions,
    surface_couple,
    surface_divergence_projected,
    surface_microtraction,
)

__all__ = [
    "ChemPot",
    "Essential",
    "Flux",
    "Mixed",
    "MixedMass",
    "Natural",
    "PfcBoundary",
    "PfcClosure",
    "PfcGhosts",
    "ShBoundary",
    "ShClosure",
    "enforce_essential",
    "face_geometry",
    "faces_of",
    "ghost_closure_pfc",
    "ghost_closure_sh",
    "natural_tractions",
    "EdgeFrame",
    "OrientedSurfacePatch",
    "edge_microtractions",
    "hypermicrotraction",
    "isotropic_tractions",
    "surface_couple",
    "surface_divergence_projected",
    "surface_microtraction",
]
