"""momoc: evaluation toolkit for 3D MRI rigid-motion correction.

Simulates inter-shot motion-corrupted undersampled k-space, reconstructs
with classical solvers, scores image quality, and turns human pairwise
comparisons into perceived motion artifact scores.
"""

from .encoding import (
    adjoint_shot,
    apply_rigid,
    apply_rigid_adjoint,
    encode_shot,
    fft3_centered,
    ifft3_centered,
)
from .errors import (
    ConfigurationError,
    DegenerateExclusionError,
    InvalidInputError,
    MomocError,
    RegistrationError,
    SolverDivergedError,
    UndefinedCorrelationError,
)
from .metrics import (
    artifact_power,
    average_edge_strength,
    preprocess_pair,
    psnr,
    register_rigid,
    ssim,
    tenengrad,
)
from .motion import (
    MILD,
    SEVERE,
    SEVERITIES,
    MotionTrajectory,
    SeverityLevel,
    corrupt,
    sample_trajectory,
)
from .phantoms import make_coil_maps, make_phantom
from .pmas import (
    ComparisonRecord,
    PmasScores,
    derive_preference,
    fit_bt,
    severity_partition,
    spearman,
)
from .recon import (
    ReconConfig,
    altopt,
    dc_loss_per_shot,
    recon_adjoint,
    recon_l1,
    threshold_shots,
)
from .sampling import SamplingPlan, generate_plan, plan_stats
from .volumes import CoilSet, EncodeConfig, RigidParams
from .wavelets import haar3, ihaar3, wavelet_l1

__version__ = "0.1.0"
