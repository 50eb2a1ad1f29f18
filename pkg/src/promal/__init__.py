"""Procrustes alignment of matrix sets and Procrustes-based distances."""

__version__ = "0.1.0"

from .align import (
    AlignConfig,
    AlignmentResult,
    align,
    solve_efficient_promises,
    solve_gpa,
    solve_opp,
    solve_promises,
)
from .cluster import Dendrogram, agglomerate, cut, rand_index
from .distance import (
    DistanceMatrix,
    distance_matrix,
    raw_distance,
    residual_distance,
    rotational_distance,
)
from .embed import Embedding, classical_mds, smacof, stress1, stress_scan
from .io import MatrixSet, load_dataset, save_alignment
from .prior import PriorSpec, build_location_matrix, identity_prior
from .simulate import SimSpec, generate
