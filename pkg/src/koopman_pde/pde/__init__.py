"""Ground-truth PDE trajectories: solvers, initial conditions and datasets."""

from .dataset import (
    KS,
    MIXES,
    PDE_BY_NAME,
    PDE_BY_TAG,
    Burgers,
    Dataset,
    Heat,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from .grid import Grid1D
from .ics import IC_KINDS, IC_TAGS, ICParams, InitialCondition, sample_ic, sample_ics
from .solvers import (
    Trajectory,
    burgers_solve_colehopf,
    burgers_solve_numeric,
    colehopf_decode,
    colehopf_encode,
    heat_solve,
    integrate,
    ks_solve,
)

__all__ = [
    "Burgers",
    "Dataset",
    "Grid1D",
    "Heat",
    "IC_KINDS",
    "IC_TAGS",
    "ICParams",
    "InitialCondition",
    "KS",
    "MIXES",
    "PDE_BY_NAME",
    "PDE_BY_TAG",
    "Trajectory",
    "burgers_solve_colehopf",
    "burgers_solve_numeric",
    "colehopf_decode",
    "colehopf_encode",
    "generate_dataset",
    "heat_solve",
    "integrate",
    "ks_solve",
    "read_dataset",
    "sample_ic",
    "sample_ics",
    "write_dataset",
]
