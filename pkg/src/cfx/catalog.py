"""Static survey catalog of counterfactual methods for time series.

Pure data plus a filter. ``implemented`` rows point at the generator id
here that realizes the method (several published variants share one
generator; the mapping is intentional, not 1:1).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ConfigError

CATEGORIES = (
    "optimization",
    "evolutionary",
    "instance",
    "latent",
    "segment",
    "hybrid",
)

DATA_KINDS = ("U", "M", "UM")


@dataclass(frozen=True)
class MethodEntry:
    id: str
    name: str
    year: int
    data: str  # U univariate, M multivariate, UM both
    category: str
    core_idea: str
    generator_id: str | None = None

    @property
    def implemented(self) -> bool:
        return self.generator_id is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["implemented"] = self.implemented
        return d


_E = MethodEntry

METHODS: tuple[MethodEntry, ...] = (
    _E("wachter2017", "Wachter et al.", 2017, "UM", "optimization",
       "Gradient descent on a validity plus distance loss in input space",
       "wachter"),
    _E("comte", "CoMTE", 2021, "M", "optimization",
       "Swaps whole channels from a close target-class instance, seeking the smallest channel subset",
       "comte"),
    _E("ts_tweaking", "TS-Tweaking", 2020, "U", "optimization",
       "Greedy nudges applied to shapelet-matched regions until the label flips"),
    _E("tscf", "TSCF", 2024, "UM", "optimization",
       "Input-space descent with smoothness and sparsity penalties on the edit",
       "tscf"),
    _E("moc", "MOC", 2020, "UM", "evolutionary",
       "Multi-objective evolutionary search balancing validity, distance and sparsity",
       "evo"),
    _E("tsevo", "TSEvo", 2022, "UM", "evolutionary",
       "NSGA-II search with mutation and crossover that respect temporal structure",
       "evo"),
    _E("sub_space", "Sub-SpaCE", 2023, "U", "evolutionary",
       "Evolutionary search constrained to edit a few contiguous subsequences",
       "evo"),
    _E("multi_space", "Multi-SpaCE", 2024, "M", "evolutionary",
       "Subsequence-level Pareto search extended to multivariate inputs",
       "evo"),
    _E("native_guide", "Native Guide", 2021, "U", "instance",
       "Copies a growing window from the nearest unlike neighbor at the most salient point",
       "native_guide"),
    _E("cels", "CELS", 2023, "U", "instance",
       "Learns a saliency mask that localizes the edit for univariate series"),
    _E("m_cels", "M-CELS", 2024, "M", "instance",
       "Mask learning for localized edits across several channels"),
    _E("ab_cf", "AB-CF", 2023, "M", "instance",
       "Ranks segments by attention and replaces the top ones with neighbor content",
       "greedy_window"),
    _E("latentcf", "Latent-CF", 2020, "UM", "latent",
       "Perturbs an autoencoder code and decodes until the classifier flips",
       "latentcf"),
    _E("cgm", "CGM", 2021, "UM", "latent",
       "Samples counterfactuals from a class-conditional generative model"),
    _E("lasts", "LASTS", 2020, "UM", "latent",
       "Explains through a latent surrogate, decoding exemplar and counter-exemplar neighborhoods"),
    _E("glacier", "GLACIER", 2024, "UM", "latent",
       "Latent descent under locality constraints so decoded series stay realistic"),
    _E("counts", "CounTS", 2023, "UM", "latent",
       "Variational model with interpretable latent factors used for causal-style edits"),
    _E("sg_cf", "SG-CF", 2022, "UM", "segment",
       "Uses discriminative shapelets to pick the subsequence to rewrite"),
    _E("sets", "SETS", 2022, "UM", "segment",
       "Swaps class-discriminative shapelet occurrences between classes"),
    _E("discox", "DisCOX", 2024, "UM", "segment",
       "Finds discord windows and replaces them with ordinary target-class content",
       "discord"),
    _E("cfwot", "CFWoT", 2024, "M", "segment",
       "Reinforcement-driven subsequence edits that need no training data access"),
    _E("ts_cem", "TS-CEM", 2020, "UM", "segment",
       "Contrastive pertinent positives and negatives over temporal segments"),
    _E("mg_cf", "MG-CF", 2022, "UM", "hybrid",
       "Motif occurrences steer which instance segments get transplanted"),
    _E("sparce", "SPARCE", 2022, "M", "hybrid",
       "Generative recourse with structured sparsity over features and time"),
    _E("terce", "TeRCE", 2022, "M", "hybrid",
       "Edits expressed through symbolic temporal rules mined from data"),
    _E("time_cf", "Time-CF", 2024, "UM", "hybrid",
       "Shapelet-guided GAN generates realistic replacement segments"),
)


def list_methods(category: str | None = None) -> list[MethodEntry]:
    """Catalog rows in table order; optional case-insensitive category filter."""
    if category is None:
        return list(METHODS)
    low = category.strip().lower()
    if low not in CATEGORIES:
        raise ConfigError(f"unknown category {category!r}, expected one of {CATEGORIES}")
    return [m for m in METHODS if m.category == low]


def implemented_ids() -> dict[str, str]:
    """Map catalog id -> generator id for the implemented subset."""
    return {m.id: m.generator_id for m in METHODS if m.generator_id is not None}
