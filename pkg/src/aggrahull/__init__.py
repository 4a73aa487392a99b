"""Convex hulls of sets defined by quadratic inequalities, described by aggregations."""

__version__ = "0.1.0"

from .certificates import (EmptinessCertificate, PdlcWitness, RecessionResult, RnStatus,
                           TripleWitnessTable, emptiness_certificate, escape_bound, hull_is_rn,
                           pdlc_witness, recession_direction, triple_pdlc_table)
from .engine import (AggregationRecord, GoodnessVerdict, HullDescription, PencilAnalysis,
                     SccClassification, classify, covers_space, enumerate_hull, improve, is_good,
                     make_record, pairwise_endpoints, pencil_analysis, support_reduce)
from .fm import OpenPolyhedron, ProjectedPolyhedron, fm_point, fm_project
from .hhc import (HhcStatus, LinearFactorFamily, hhc_falsify, hhc_structural,
                  hidden_convexity_falsify, normalize_pd_family, soc_preimage)
from .io import load_system, parse_system, dump_system, system_from_dict, system_to_dict
from .linalg import Inertia, eigh, inertia, jacobi_eigen, max_min_eig, min_eig, pencil_det_poly
from .oracle import (HullVerdict, SamplerConfig, hull_member, sample_S, sample_T, set_equal_mc,
                     verify_hull)
from .qform import (PreconditionError, QuadraticFunction, QuadraticSystem, aggregate,
                    change_basis, homogenize)
from .special import (closed_hull, diagonal_hull, diagonal_projection, sphere_hull, sphere_omega,
                      zero_aggregation)

__all__ = [name for name in dir() if not name.startswith("_")]
