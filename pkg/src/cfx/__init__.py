"""Counterfactual explanations for time series classifiers.

Eight generators behind one calling convention, numpy classifiers with
exact input gradients, distance kernels (DTW, Frechet, sparsity masks),
an evaluation/benchmark layer and SVG rendering. See README.md.
"""

from .benchmark import BenchmarkConfig, BenchmarkReport, run_benchmark, second_choice_target
from .catalog import CATEGORIES, METHODS, MethodEntry, implemented_ids, list_methods
from .config import RunConfig, load_datasets, load_run_config
from .data import (
    Dataset,
    LabeledInstance,
    NormStats,
    TimeSeries,
    parse_ts,
    parse_ucr_tsv,
    planted_bump_dataset,
    serialize_dataset,
    znormalize,
)
from .distances import (
    ChangeMask,
    DistanceConfig,
    changed_fraction,
    changed_segments,
    distance,
    dtw,
    frechet,
    l0_changed,
    minkowski,
)
from .errors import (
    BandError,
    CapabilityError,
    CfxError,
    ConfigError,
    FormatError,
    MetricUnavailable,
    NoNeighborError,
    ParseError,
    ShapeError,
    TrainError,
)
from .evaluation import (
    MetricReport,
    aggregate,
    autocorr_distance,
    diversity,
    evaluate_one,
    ood_score,
    pick_representative,
    spectral_distance,
    stability,
)
from .generators import (
    CONFIG_TYPES,
    GENERATOR_IDS,
    GENERATORS,
    Autoencoder,
    ComteConfig,
    DiscordConfig,
    EvoConfig,
    GreedyWindowConfig,
    LatentConfig,
    NativeGuideConfig,
    OptConfig,
    comte_generate,
    crowding_distance,
    discord_generate,
    dominates,
    evolve_generate,
    greedy_window_generate,
    latentcf_generate,
    matrix_profile,
    native_guide_generate,
    nearest_unlike_neighbor,
    nondominated_sort,
    occlusion_saliency,
    top_discord,
    train_autoencoder,
    tscf_generate,
    wachter_generate,
)
from .models import (
    Classifier,
    CountingClassifier,
    GradientClassifier,
    KNNClassifier,
    MLPClassifier,
    MLPSpec,
    load_model,
    save_model,
    train_knn,
    train_mlp,
)
from .plot import render_svg, save_svg
from .result import CounterfactualResult, CounterfactualSet

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BenchmarkConfig", "BenchmarkReport", "run_benchmark", "second_choice_target",
    "CATEGORIES", "METHODS", "MethodEntry", "implemented_ids", "list_methods",
    "RunConfig", "load_datasets", "load_run_config",
    "Dataset", "LabeledInstance", "NormStats", "TimeSeries",
    "parse_ts", "parse_ucr_tsv", "planted_bump_dataset", "serialize_dataset", "znormalize",
    "ChangeMask", "DistanceConfig", "changed_fraction", "changed_segments",
    "distance", "dtw", "frechet", "l0_changed", "minkowski",
    "BandError", "CapabilityError", "CfxError", "ConfigError", "FormatError",
    "MetricUnavailable", "NoNeighborError", "ParseError", "ShapeError", "TrainError",
    "MetricReport", "aggregate", "autocorr_distance", "diversity", "evaluate_one",
    "ood_score", "pick_representative", "spectral_distance", "stability",
    "CONFIG_TYPES", "GENERATOR_IDS", "GENERATORS",
    "Autoencoder", "ComteConfig", "DiscordConfig", "EvoConfig", "GreedyWindowConfig",
    "LatentConfig", "NativeGuideConfig", "OptConfig",
    "comte_generate", "crowding_distance", "discord_generate", "dominates", "evolve_generate",
    "greedy_window_generate", "latentcf_generate", "matrix_profile",
    "native_guide_generate", "nearest_unlike_neighbor", "nondominated_sort",
    "occlusion_saliency", "top_discord", "train_autoencoder",
    "tscf_generate", "wachter_generate",
    "Classifier", "CountingClassifier", "GradientClassifier", "KNNClassifier",
    "MLPClassifier", "MLPSpec", "load_model", "save_model", "train_knn", "train_mlp",
    "render_svg", "save_svg",
    "CounterfactualResult", "CounterfactualSet",
]
