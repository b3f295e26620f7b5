"""Phase-aware parallel MRI toolkit built on virtual conjugate coils.

Subspace calibration on a conjugate-augmented coil stack yields sensitivity
maps that include the absolute image phase; phase-constrained SENSE then
exploits them for undersampled and one-sided k-space reconstruction. The
package provides the array core (calibration, phase centering, solvers,
projections), a synthetic phantom, estimator-style wrappers and a CLI.
"""

from .calib import (
    CalibSubspace,
    SensitivityMaps,
    build_calib_matrix,
    calibrate,
    eigen_maps,
    smoothstep,
    soft_weight,
)
from .evaluate import (
    ErrorMap,
    diff_image,
    direct_maps,
    doubled_angle_error,
    edge_sharpness,
    export_error_image,
    nrmse,
    project,
    rss,
    write_pgm,
)
from .ktensor import (
    KTensor,
    KTensorFormatError,
    BadMagicError,
    TruncatedFileError,
    ExtentOverflowError,
    center_crop,
    center_pad,
    fftc,
    ifftc,
    read_ktensor,
    write_ktensor,
)
from .estimators import (
    EspiritCalibration,
    SenseReconstruction,
    VccEspiritCalibration,
)
from .phantom import PhantomTruth, make_phantom, simulate_kspace
from .recon import (
    ForwardModel,
    ReconResult,
    partial_fourier_recon,
    solve,
    synthesize_coil_images,
)
from .sampling import SamplingPattern, apply_pattern
from .vcc import (
    PhaseMap,
    VccKSpace,
    align_sign,
    center_phase,
    check_conjugate_pairing,
    conj_flip,
    make_vcc,
)

__version__ = "0.1.0"

__all__ = [
    "KTensor",
    "KTensorFormatError",
    "BadMagicError",
    "TruncatedFileError",
    "ExtentOverflowError",
    "fftc",
    "ifftc",
    "center_crop",
    "center_pad",
    "read_ktensor",
    "write_ktensor",
    "SamplingPattern",
    "apply_pattern",
    "PhantomTruth",
    "make_phantom",
    "simulate_kspace",
    "CalibSubspace",
    "SensitivityMaps",
    "build_calib_matrix",
    "calibrate",
    "eigen_maps",
    "smoothstep",
    "soft_weight",
    "VccKSpace",
    "PhaseMap",
    "conj_flip",
    "make_vcc",
    "center_phase",
    "align_sign",
    "check_conjugate_pairing",
    "ForwardModel",
    "ReconResult",
    "solve",
    "partial_fourier_recon",
    "synthesize_coil_images",
    "ErrorMap",
    "rss",
    "direct_maps",
    "project",
    "diff_image",
    "nrmse",
    "doubled_angle_error",
    "edge_sharpness",
    "export_error_image",
    "write_pgm",
    "EspiritCalibration",
    "VccEspiritCalibration",
    "SenseReconstruction",
    "__version__",
]
