"""Boundary-shape-independent D-bar/Beltrami pipeline for absolute EIT."""

from .errors import ConvergenceError, ValidationError
from .grids import ComplexField, SquareGrid, dbar_derivative, periodic_convolve
from .solver import RealLinearOperator, solve_real_linear
from .phantoms import (
    ConductivityImage,
    InclusionSpec,
    OrganTemplate,
    SplitSpec,
    generate_act4_phantom,
    generate_kit4_phantom,
    rasterize,
    scale_to_unit_boundary,
)
from .beltrami import BeltramiCoefficient, CgoSolverConfig, beltrami_coefficient, beltrami_scattering, solve_cgo
from .scattering import ScatteringData, resample, tau_to_T, texp_from_dn, truncate_threshold
from .dbar import DbarSolveConfig, LowPassReconstruction, reconstruct, solve_dbar_at
from .electrodes import (
    CurrentPatternBasis,
    DnMatrix,
    ElectrodeLayout,
    NdMatrix,
    build_nd_matrix,
    circular_layout,
    fit_sigma0,
    invert_nd,
    scale_to_unit,
    simulate_electrode_data,
    voltage_to_current_basis,
)
from .dataset import DatasetConfig, TrainingPair, generate_dataset, generate_pair, read_pair, write_pair
from .metrics import EvalReport, build_truth_image, evaluate_images, rel_error, ssim

__version__ = "0.1.0"
