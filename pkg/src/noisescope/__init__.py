"""noisescope: plausibility-oriented noise-range analysis and scheduling for
small diffusion models.

The package determines the noise interval over which image structure forms
and dissolves, derives training densities and sampling bounds that prioritize
it, and provides the samplers, denoisers, synthetic data, editing tools and
metrics needed to verify the whole pipeline at desk scale.
"""

__version__ = "0.1.0"

from . import errors
from .dataset import (
    GeneratorConfig,
    PlausibilityVerdict,
    StructureSpec,
    generate_structure,
    load_corpus,
    load_image,
    pad_to_square,
    plausibility_check,
    save_image,
)
from .denoiser import Denoiser, GmmOracle, denoise_loss, gmm_denoise
from .diffusion import SamplerConfig, encode, decode, forward_perturb, sample, score
from .editing import InpaintTask, inpaint, interpolate
from .metrics import EvalReport, evaluate, pdr_auto, pixel_frechet, ssim
from .rangefinder import (
    PerturbationTrace,
    RangeFinderConfig,
    RangeReport,
    estimate_sigma_end,
    estimate_sigma_start,
    find_range,
    gaussian_kl,
    perturb,
    run_sweep,
    segment_object,
    shapiro_wilk,
)
from .schedule import (
    CHURN_EDM,
    CHURN_LIGHT,
    CHURN_NONE,
    EDM_RHO,
    EDM_SIGMA_MAX,
    EDM_SIGMA_MIN,
    EDM_TRAINING_DENSITY,
    ChurnParams,
    NoiseRange,
    SamplingSchedule,
    TrainingNoiseDensity,
    churned_sigma,
    make_schedule,
    prioritization_density,
    sample_training_sigma,
    sampling_bounds_from_range,
    training_density_from_range,
)

# Trainable denoisers pull in torch; import lazily so the analysis-only paths
# stay light.
_LAZY = {
    "TrainableDenoiser": "training",
    "TrainConfig": "training",
    "train": "training",
    "save_checkpoint": "training",
    "load_checkpoint": "training",
    "ComparisonConfig": "experiments",
    "ComparisonResult": "experiments",
    "run_schedule_comparison": "experiments",
}


def __getattr__(name):
    if name in _LAZY:
        import importlib

        module = importlib.import_module(f".{_LAZY[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
