"""Generator registry: one id per method, one calling convention for all.

Every entry is callable as ``fn(model, dataset, x, target, config=None,
autoencoder=None)`` and returns a CounterfactualResult (or a
CounterfactualSet for the set-valued evolutionary search).
"""

from __future__ import annotations

from ..errors import ConfigError
from .evolutionary import (
    EvoConfig,
    crowding_distance,
    dominates,
    evolve_generate,
    nondominated_sort,
)
from .instance import (
    ComteConfig,
    NativeGuideConfig,
    NUNResult,
    comte_generate,
    native_guide_generate,
    nearest_unlike_neighbor,
    occlusion_saliency,
)
from .latent import Autoencoder, LatentConfig, latentcf_generate, train_autoencoder
from .optimization import OptConfig, tscf_generate, wachter_generate
from .segment import (
    DiscordConfig,
    GreedyWindowConfig,
    MatrixProfile,
    discord_generate,
    greedy_window_generate,
    matrix_profile,
    top_discord,
)


def _need_autoencoder(autoencoder):
    if autoencoder is None:
        raise ConfigError("latentcf needs a trained autoencoder")
    return autoencoder


GENERATORS = {
    "wachter": lambda model, dataset, x, target, config=None, autoencoder=None: (
        wachter_generate(model, x, target, config)
    ),
    "tscf": lambda model, dataset, x, target, config=None, autoencoder=None: (
        tscf_generate(model, x, target, config)
    ),
    "native_guide": lambda model, dataset, x, target, config=None, autoencoder=None: (
        native_guide_generate(model, dataset, x, target, config)
    ),
    "comte": lambda model, dataset, x, target, config=None, autoencoder=None: (
        comte_generate(model, dataset, x, target, config)
    ),
    "evo": lambda model, dataset, x, target, config=None, autoencoder=None: (
        evolve_generate(model, dataset, x, target, config)
    ),
    "discord": lambda model, dataset, x, target, config=None, autoencoder=None: (
        discord_generate(model, dataset, x, target, config)
    ),
    "greedy_window": lambda model, dataset, x, target, config=None, autoencoder=None: (
        greedy_window_generate(model, dataset, x, target, config)
    ),
    "latentcf": lambda model, dataset, x, target, config=None, autoencoder=None: (
        latentcf_generate(model, _need_autoencoder(autoencoder), x, target, config)
    ),
}

GENERATOR_IDS = tuple(GENERATORS)

CONFIG_TYPES = {
    "wachter": OptConfig,
    "tscf": OptConfig,
    "native_guide": NativeGuideConfig,
    "comte": ComteConfig,
    "evo": EvoConfig,
    "discord": DiscordConfig,
    "greedy_window": GreedyWindowConfig,
    "latentcf": LatentConfig,
}

__all__ = [
    "GENERATORS",
    "GENERATOR_IDS",
    "CONFIG_TYPES",
    "Autoencoder",
    "ComteConfig",
    "DiscordConfig",
    "EvoConfig",
    "GreedyWindowConfig",
    "LatentConfig",
    "MatrixProfile",
    "NUNResult",
    "NativeGuideConfig",
    "OptConfig",
    "comte_generate",
    "crowding_distance",
    "discord_generate",
    "dominates",
    "evolve_generate",
    "greedy_window_generate",
    "latentcf_generate",
    "matrix_profile",
    "native_guide_generate",
    "nearest_unlike_neighbor",
    "nondominated_sort",
    "occlusion_saliency",
    "top_discord",
    "train_autoencoder",
    "tscf_generate",
    "wachter_generate",
]
