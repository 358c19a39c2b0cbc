"""Implicit neural representations for time series.

SIREN fitting and activation comparison, TV-regularized imputation, the
HyperTime set-encoder/hypernetwork generator and generation metrics, all on
a small numpy reverse-mode engine.
"""

from . import spectral  # registers the differentiable rfft op
from .autodiff import AdamState, NumericalError, ShapeError, Tape, Var, adam_step
from .data_io import Dataset, load_csv_multivariate, load_ucr_tsv, synth_corpus
from .evaluation import (
    EvalReport,
    PredictorSpec,
    ablation_fft,
    evaluate_generation,
    export_projection,
    precision_recall_f1,
    predictive_score,
    spectral_variance_profile,
)
from .hyper import (
    Embedding,
    HyperTimeConfig,
    HyperTimeModel,
    decode,
    encode,
    hypertime_loss,
    interpolate_generate,
    pca_generate,
    train_hypertime,
)
from .imputation import ImputationReport, MaskedSeries, impute, impute_baseline, impute_inr, mask_series, tv_prior
from .inr import FitOptions, MlpSpec, ParamVector, compare_activations, evaluate, fit, init_params
from .series import TimeSeries, uniform_grid
from .spectral import Spectrum, ffte, fft_loss, rfft

__version__ = "0.1.0"
