"""molab: a numerical laboratory for Musielak-Orlicz Campanato analysis.

Builds discretized 1D/2D domains, growth functions phi(x, t), Luxembourg
norms, polynomial projections, Campanato seminorm variants, oscillation
distribution curves, atoms with duality pairings, and Carleson tent
energies, with certificates for the growth indices that control them.
"""

__version__ = "0.1.0"

from .atoms import (
    Atom,
    AtomReport,
    PairingReport,
    duality_pairing,
    lambda_q,
    lq_phi_ball_norm,
    make_atom,
    raw_moments,
    validate_atom,
)
from .campanato import (
    EquivalenceReport,
    bmo_phi_norm,
    campanato_eps_norm,
    campanato_inf_norm,
    campanato_norm,
    campanato_per_ball,
    classical_campanato_norm,
    equivalence_report,
)
from .carleson import (
    HalfSpaceField,
    Kernel,
    area_function,
    build_kernel,
    calderon_deviation,
    carleson_norm,
    default_t_levels,
    square_transform,
)
from .config import ExperimentConfig, growth_from_dict, growth_to_dict
from .corpus import DEFAULT_CORPUS, corpus
from .errors import (
    BandTooNarrowError,
    ConfigError,
    ConvergenceError,
    DegenerateProfileError,
    EmptyRegionError,
    EpsilonTooSmallError,
    IllConditionedError,
    MolabError,
    NormOverflowError,
    NotA1Error,
    SingularNodeError,
    UnderdeterminedError,
    WeightFloorError,
)
from .grid import (
    Ball,
    Box,
    Grid,
    GridFunction,
    ball_family,
    indicator,
    integrate,
    read_csv,
    region_mask,
    write_csv,
)
from .growth import (
    GrowthFunction,
    GrowthIndices,
    IndexSearchConfig,
    TypeSampleConfig,
    WeightSpec,
    critical_indices,
    custom,
    ky_log,
    muckenhoupt_constant,
    phi_measure,
    power,
    uniform_type_constant,
    weighted_power,
)
from .johnnirenberg import JNCurve, JNFit, jn_distribution, jn_fit
from .luxembourg import (
    LuxResult,
    chi_ball_norm,
    clear_chi_cache,
    comparison_constant,
    luxembourg_norm,
    luxembourg_solve,
)
from .polyproj import MultiPoly, lemma_pbg_ratio, multi_indices, orthogonality_residuals, project
from .report import Report, canonical_bytes, validate_report, write_report

__all__ = [name for name in dir() if not name.startswith("_")]
