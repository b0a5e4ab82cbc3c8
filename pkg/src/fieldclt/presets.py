"""Built-in experiment presets, one per constructed field family.

Every preset pins its own seed so a bare `fieldclt run --preset NAME` is
reproducible; --seed overrides it.
"""

from __future__ import annotations

from .config import ExperimentConfig
from .fields import (
    ChaosField,
    CoeffTensor,
    Composite,
    IIDField,
    ProductIID,
    SignFlipCocycle,
    Window,
)
from .limitlaw import ChaosProduct, Convolution, Normal, ProductOfNormals

DEFAULT_SEED = 20260823

T_GRID_13 = tuple(0.25 * k for k in range(13))  # 0.0 .. 3.0

_CHAOS_TENSOR = CoeffTensor((((1, 1, 1), 0.6), ((2, 2, 2), 0.8)), d=3)


def _presets() -> dict[str, ExperimentConfig]:
    return {
        "product-iid-d2": ExperimentConfig(
            name="product-iid-d2",
            spec=ProductIID(d=2),
            window=Window((256, 256)),
            replicates=20000,
            master_seed=DEFAULT_SEED,
            law=ProductOfNormals(2),
            t_grid=T_GRID_13,
        ),
        "product-iid-d3": ExperimentConfig(
            name="product-iid-d3",
            spec=ProductIID(d=3),
            window=Window((256, 256, 256)),
            replicates=20000,
            master_seed=DEFAULT_SEED,
            law=ProductOfNormals(3),
            t_grid=T_GRID_13,
        ),
        "chaos": ExperimentConfig(
            name="chaos",
            spec=ChaosField(_CHAOS_TENSOR),
            window=Window((256, 256, 256)),
            replicates=10000,
            master_seed=DEFAULT_SEED,
            law=ChaosProduct(_CHAOS_TENSOR),
        ),
        "bessel": ExperimentConfig(
            name="bessel",
            spec=SignFlipCocycle(),
            window=Window((256, 256)),
            replicates=20000,
            master_seed=DEFAULT_SEED,
            law=ProductOfNormals(2),
            t_grid=T_GRID_13,
        ),
        "bessel-wide": ExperimentConfig(
            name="bessel-wide",
            spec=SignFlipCocycle(),
            window=Window((16384, 16384)),
            replicates=20000,
            master_seed=DEFAULT_SEED,
            law=ProductOfNormals(2),
            t_grid=T_GRID_13,
        ),
        "normal-baseline": ExperimentConfig(
            name="normal-baseline",
            spec=IIDField(),
            window=Window((256, 256)),
            replicates=20000,
            master_seed=DEFAULT_SEED,
            law=Normal(1.0),
            t_grid=T_GRID_13,
        ),
        "convolution": ExperimentConfig(
            name="convolution",
            spec=Composite((ProductIID(d=2), IIDField())),
            window=Window((256, 256)),
            replicates=20000,
            master_seed=DEFAULT_SEED,
            law=Convolution((ProductOfNormals(2), Normal(1.0))),
            t_grid=T_GRID_13,
        ),
    }


PRESET_NOTES = {
    "product-iid-d2": "product of two independent rows, 256^2, limit is a product of two normals",
    "product-iid-d3": "product of three independent rows, 256^3 via factorized path",
    "chaos": "two-term Hermite chaos tensor, 256^3, compared against its chaos-product sampler",
    "bessel": "sign-flip cocycle field at 256^2; the sum keeps an atom at zero at this window, "
    "so the KS verdict fails until the window grows (see bessel-wide)",
    "bessel-wide": "sign-flip cocycle at 16384^2, where the atom is small enough to pass KS",
    "normal-baseline": "i.i.d. cells, 256^2, classical CLT check against Normal(1)",
    "convolution": "sum of a product field and an independent i.i.d. field; limit is the convolution",
}


def preset_names() -> tuple[str, ...]:
    return tuple(_presets())


def get_preset(name: str) -> ExperimentConfig:
    try:
        return _presets()[name]
    except KeyError:
        known = ", ".join(preset_names())
        raise ValueError(f"unknown preset {name!r}; known presets: {known}") from None
