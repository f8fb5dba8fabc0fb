"""heightlab: integer height functions on cubic planar lattices.

The package builds finite patches of degree-3 shift-invariant planar
lattices, runs exact and Markov-chain samplers for gradient Gibbs
measures on them, and provides the bookkeeping used to audit those
samplers: edge enrichment with half-integer midpoints, exploration
processes, level-set percolation censuses, and batch experiment
drivers with reproducible seeding.
"""

__version__ = "0.1.0"

from . import lattice
from . import potentials
from . import gibbs
from . import enrichment
from . import exploration
from . import percolation
from . import experiments

__all__ = [
    "lattice",
    "potentials",
    "gibbs",
    "enrichment",
    "exploration",
    "percolation",
    "experiments",
    "__version__",
]
