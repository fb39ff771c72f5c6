"""Weighted persistent homology toolkit.

Point clouds carry per-point ball-growth functions; this package builds the
corresponding weighted Vietoris-Rips and Cech filtrations, computes Z/2
persistence barcodes, measures diagrams with the bottleneck distance,
machine-checks the sandwich and stability bounds that justify the weighted
construction, and classifies handwritten eights by a bar-ratio rule.
"""

from .geometry import (
    Affine,
    Linear,
    PointCloud,
    PowerLaw,
    RadiusFunction,
    Region,
    linear_radii,
    pairwise_distances,
    weighted_distance_matrix,
)
from .filtration import (
    CechSolverError,
    FiltrationSizeError,
    Filtration,
    build_weighted_cech,
    build_weighted_rips,
    cech_membership_value,
    edge_entry_time,
    verify_vr_lemma,
)
from .persistence import (
    Barcode,
    BoundaryMatrix,
    Pairing,
    PersistenceDiagram,
    betti_at,
    boundary_matrix,
    diagram,
    reduce,
)
from .metrics import (
    Relation,
    StabilityBound,
    bottleneck_distance,
    entry_function,
    entry_sup_distance,
    stability_bound,
    verify_diagram_stability,
)
from .mnist import (
    ConfusionMatrix,
    LabeledImage,
    MnistConfig,
    classify_eight,
    evaluate,
    image_to_unit_cloud,
    image_to_weighted_cloud,
    load_digits_csv,
)

__version__ = "0.1.0"
