from .generate import ReactorGridSpec, generate_h2_grid
from .mechanism import REACTIONS, SPECIES
from .reactor import mixture_from_phi, run_reactor

__all__ = [
    "ReactorGridSpec",
    "generate_h2_grid",
    "REACTIONS",
    "SPECIES",
    "mixture_from_phi",
    "run_reactor",
]
