"""guidewalk: composable diffusion guidance with scale functions,
analytic denoiser oracles, and style walks."""

from .diagnostics import (
    MetricReport,
    effective_mean,
    energy_distance,
    energy_distance_permutation_test,
    layout_preservation,
    low_band_share,
    mean_field_error,
    norm_map_series,
)
from .errors import DocumentError, ShapeMismatchError
from .fields import Field, Shape, axpy, band_energy, dct2
from .guidance import (
    GSF,
    GuidanceTerm,
    SpatialMask,
    TemporalProfile,
    cfg,
    compose,
    eval_gsf,
    guidance_norm_map,
    guidance_term,
    make_mask,
)
from .gwf import field_from_bytes, field_to_bytes, read_field, render_pgm, write_field
from .models import (
    NULL_CONDITION,
    ConditionModel,
    GaussianComponent,
    builtin_model,
    exact_epsilon,
    load_model,
    load_model_file,
    predict_noise,
    sample_direct,
)
from .noise import DIAGNOSTICS, INIT_LATENT, SAMPLER_NOISE, NoiseKey, draw_noise, draw_noise_batch
from .runspec import OutputSpec, RunSpec, SamplerSpec, TermSpec, parse_runspec
from .sampler import (
    SamplerConfig,
    Trajectory,
    TrajectoryStep,
    ddim_step,
    ddpm_step,
    run_sampling,
)
from .schedule import NoiseSchedule, linear_beta_schedule, t_of
from .storage import ArtifactStore, ModelRegistry, execute_run
from .walks import (
    WalkAxis,
    WalkSpec,
    blend_conditions_baseline,
    interpolate_styles,
    plan_walk,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
