"""Stationary martingale-difference random fields on the lattice.

A field specification describes how cell values arise from independent
per-axis (or per-cell) driver sequences; sampling materializes the values
on a finite window.  All specs here satisfy the martingale-difference
property: conditioning a cell on the half-space past of any axis gives 0.

Driver streams are counter-based (see `rng`), so a realization is a pure
function of (spec digest, master seed, replicate id).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import rng

_DRIVERS = ("gaussian", "rademacher")


# ---------------------------------------------------------------------------
# windows and coefficient tensors


@dataclass(frozen=True)
class Window:
    """A finite rectangular block of lattice sites, indexed 1-based."""

    lengths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(int(v) for v in self.lengths))
        if len(self.lengths) not in (2, 3):
            raise ValueError("window dimension must be 2 or 3")
        if any(v < 1 for v in self.lengths):
            raise ValueError("window lengths must be >= 1")

    @property
    def d(self) -> int:
        return len(self.lengths)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.lengths))


@dataclass(frozen=True)
class CoeffTensor:
    """Sparse coefficients lambda indexed by tuples of Hermite orders >= 1."""

    entries: tuple[tuple[tuple[int, ...], float], ...]
    d: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("tensor dimension must be 2 or 3")
        norm = []
        seen = set()
        for idx, lam in self.entries:
            idx = tuple(int(a) for a in idx)
            lam = float(lam)
            if len(idx) != self.d:
                raise ValueError(f"index {idx} has wrong length")
            if any(a < 1 for a in idx):
                raise ValueError("Hermite orders must be >= 1")
            if idx in seen:
                raise ValueError(f"duplicate index {idx}")
            if not math.isfinite(lam):
                raise ValueError("coefficients must be finite")
            seen.add(idx)
            norm.append((idx, lam))
        object.__setattr__(self, "entries", tuple(norm))
        if self.sq_sum == 0.0:
            raise ValueError("tensor must have positive squared mass")

    @property
    def sq_sum(self) -> float:
        return float(sum(lam * lam for _, lam in self.entries))

    def restrict(self, k: int) -> "CoeffTensor":
        """Keep only the first k entries."""
        return CoeffTensor(self.entries[:k], self.d)


# ---------------------------------------------------------------------------
# field specifications


@dataclass(frozen=True)
class ProductIID:
    """Cell (i,j,k) = U_i V_j W_k for independent driver sequences per axis."""

    d: int = 3
    driver: str = "gaussian"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.driver not in _DRIVERS:
            raise ValueError(f"unknown driver {self.driver!r}")


@dataclass(frozen=True)
class ChaosField:
    """Cell = sum of lambda * products of orthonormal Hermite values of the
    per-axis Gaussian drivers."""

    tensor: CoeffTensor
    driver: str = "gaussian"

    def __post_init__(self):
        if self.driver != "gaussian":
            raise ValueError("chaos fields are driven by Gaussian sequences")


@dataclass(frozen=True)
class SignFlipCocycle:
    """Cell (i,j) = X_i Y_j z (-1)^(i+j): Rademacher axes, one shared sign z.

    The alternating sign keeps every cell a martingale difference while the
    normalized block sums converge to a product of two independent normals.
    """


@dataclass(frozen=True)
class IIDField:
    """Independent cells: the textbook CLT baseline."""

    d: int = 2
    driver: str = "gaussian"

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.driver not in _DRIVERS:
            raise ValueError(f"unknown driver {self.driver!r}")


@dataclass(frozen=True)
class ZeroField:
    """The degenerate field of zeros (useful as a composite part)."""

    d: int = 2

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")


@dataclass(frozen=True)
class Composite:
    """Pointwise sum of two fields driven by disjoint streams."""

    parts: tuple["FieldSpec", "FieldSpec"]

    def __post_init__(self):
        if len(self.parts) != 2:
            raise ValueError("composite takes exactly two parts")
        if any(isinstance(p, Composite) for p in self.parts):
            raise ValueError("composite parts cannot themselves be composite")
        dims = {dimension(p) for p in self.parts}
        if len(dims) != 1:
            raise ValueError("composite parts must share dimension")


@dataclass(frozen=True)
class TruncatedLocal:
    """A local field with its cell function truncated at a level and
    recentered by the three one-sided partial averages (see stats.truncate_fC)."""

    base: "FieldSpec"
    bound: float

    def __post_init__(self):
        if self.bound <= 0:
            raise ValueError("truncation level must be positive")
        local_model(self.base)  # validates the base is local


FieldSpec = Union[
    ProductIID, ChaosField, SignFlipCocycle, IIDField, ZeroField, Composite, TruncatedLocal
]


def dimension(spec: FieldSpec) -> int:
    if isinstance(spec, ProductIID):
        return spec.d
    if isinstance(spec, ChaosField):
        return spec.tensor.d
    if isinstance(spec, SignFlipCocycle):
        return 2
    if isinstance(spec, (IIDField, ZeroField)):
        return spec.d
    if isinstance(spec, Composite):
        return dimension(spec.parts[0])
    if isinstance(spec, TruncatedLocal):
        return dimension(spec.base)
    raise TypeError(f"not a field spec: {spec!r}")


# ---------------------------------------------------------------------------
# serialization and provenance


def spec_to_json(spec: FieldSpec) -> dict:
    if isinstance(spec, ProductIID):
        return {"kind": "product_iid", "d": spec.d, "driver": spec.driver}
    if isinstance(spec, ChaosField):
        return {
            "kind": "chaos",
            "tensor": {
                "d": spec.tensor.d,
                "entries": [{"index": list(i), "coeff": lam} for i, lam in spec.tensor.entries],
            },
            "driver": spec.driver,
        }
    if isinstance(spec, SignFlipCocycle):
        return {"kind": "sign_flip"}
    if isinstance(spec, IIDField):
        return {"kind": "iid", "d": spec.d, "driver": spec.driver}
    if isinstance(spec, ZeroField):
        return {"kind": "zero", "d": spec.d}
    if isinstance(spec, Composite):
        return {"kind": "composite", "parts": [spec_to_json(p) for p in spec.parts]}
    if isinstance(spec, TruncatedLocal):
        return {"kind": "truncated", "base": spec_to_json(spec.base), "bound": spec.bound}
    raise TypeError(f"not a field spec: {spec!r}")


def spec_from_json(obj: dict) -> FieldSpec:
    kind = obj.get("kind")
    if kind == "product_iid":
        return ProductIID(d=obj.get("d", 3), driver=obj.get("driver", "gaussian"))
    if kind == "chaos":
        t = obj["tensor"]
        entries = tuple((tuple(e["index"]), float(e["coeff"])) for e in t["entries"])
        return ChaosField(CoeffTensor(entries, t["d"]), driver=obj.get("driver", "gaussian"))
    if kind == "sign_flip":
        return SignFlipCocycle()
    if kind == "iid":
        return IIDField(d=obj.get("d", 2), driver=obj.get("driver", "gaussian"))
    if kind == "zero":
        return ZeroField(d=obj.get("d", 2))
    if kind == "composite":
        return Composite(tuple(spec_from_json(p) for p in obj["parts"]))
    if kind == "truncated":
        return TruncatedLocal(spec_from_json(obj["base"]), float(obj["bound"]))
    raise ValueError(f"unknown field kind {kind!r}")


def spec_digest(spec: FieldSpec) -> str:
    blob = json.dumps(spec_to_json(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Provenance:
    digest: str
    master_seed: int
    replicate: int


@dataclass(frozen=True)
class Realization:
    """Materialized field values on a window, tagged so it can be re-generated."""

    window: Window
    values: np.ndarray
    provenance: Provenance


# ---------------------------------------------------------------------------
# driver access


def axis_stream(axis: int, component: int = 0) -> str:
    return f"c{component}:axis{axis}"


def axis_values(spec_driver, master_seed, replicate, axis, n, component=0):
    return rng.draw(master_seed, axis_stream(axis, component), replicate, n, spec_driver)


def shared_sign(master_seed, replicate, component=0) -> float:
    """The single +-1 sign shared by all cells of a sign-flip replicate."""
    v = rng.draw(master_seed, f"c{component}:sign", replicate, 1, "rademacher")
    return float(v[0])


def cell_values(spec_driver, master_seed, replicate, n, component=0):
    return rng.draw(master_seed, f"c{component}:cells", replicate, n, spec_driver)


# ---------------------------------------------------------------------------
# Hermite polynomials


def hermite_orthonormal(a: int, x):
    """Orthonormal Hermite value h_a(x) = He_a(x) / sqrt(a!).

    He_a are the monic Hermite polynomials orthogonal for the standard
    normal weight, so {h_a} is orthonormal in L2(Phi).  Order 0 is rejected:
    constants are not martingale differences and never appear in a field.
    """
    if a < 1:
        raise ValueError("Hermite order must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    prev = np.ones_like(x)
    cur = x.copy()
    for n in range(1, a):
        prev, cur = cur, x * cur - n * prev
    return cur / math.sqrt(math.factorial(a))


# ---------------------------------------------------------------------------
# samplers


def _alternating(n: int) -> np.ndarray:
    """(-1)^i for i = 1..n."""
    s = np.ones(n)
    s[::2] = -1.0
    return s


def sample(spec: FieldSpec, window: Window, master_seed: int, replicate: int,
           component: int = 0) -> Realization:
    """Materialize one replicate of a field on a window."""
    d = dimension(spec)
    if window.d != d:
        raise ValueError(f"window dimension {window.d} does not match the spec ({d})")
    prov = Provenance(spec_digest(spec), master_seed, replicate)

    if isinstance(spec, ProductIID):
        axes = [
            axis_values(spec.driver, master_seed, replicate, t, n, component)
            for t, n in enumerate(window.lengths)
        ]
        if d == 2:
            vals = np.outer(axes[0], axes[1])
        else:
            vals = axes[0][:, None, None] * axes[1][None, :, None] * axes[2][None, None, :]
        return Realization(window, vals, prov)

    if isinstance(spec, ChaosField):
        axes = [
            axis_values(spec.driver, master_seed, replicate, t, n, component)
            for t, n in enumerate(window.lengths)
        ]
        herm = [
            {a: hermite_orthonormal(a, axes[t]) for a in sorted({idx[t] for idx, _ in spec.tensor.entries})}
            for t in range(d)
        ]
        vals = np.zeros(window.lengths)
        for idx, lam in spec.tensor.entries:
            if d == 2:
                vals += lam * np.outer(herm[0][idx[0]], herm[1][idx[1]])
            else:
                vals += lam * (
                    herm[0][idx[0]][:, None, None]
                    * herm[1][idx[1]][None, :, None]
                    * herm[2][idx[2]][None, None, :]
                )
        return Realization(window, vals, prov)

    if isinstance(spec, SignFlipCocycle):
        x = axis_values("rademacher", master_seed, replicate, 0, window.lengths[0], component)
        y = axis_values("rademacher", master_seed, replicate, 1, window.lengths[1], component)
        z = shared_sign(master_seed, replicate, component)
        vals = z * np.outer(_alternating(window.lengths[0]) * x, _alternating(window.lengths[1]) * y)
        return Realization(window, vals, prov)

    if isinstance(spec, IIDField):
        vals = cell_values(spec.driver, master_seed, replicate, window.cell_count, component)
        return Realization(window, vals.reshape(window.lengths), prov)

    if isinstance(spec, ZeroField):
        return Realization(window, np.zeros(window.lengths), prov)

    if isinstance(spec, Composite):
        a = sample(spec.parts[0], window, master_seed, replicate, component=1)
        b = sample(spec.parts[1], window, master_seed, replicate, component=2)
        return Realization(window, a.values + b.values, prov)

    if isinstance(spec, TruncatedLocal):
        model = local_model(spec.base)
        fc = truncated_cell_fn(spec)
        axes = [
            rng.draw(master_seed, axis_stream(t, component), replicate, n, model.axis_driver)
            for t, n in enumerate(window.lengths)
        ]
        uu, vv = np.meshgrid(axes[0], axes[1], indexing="ij")
        if model.sign_cocycle:
            z = shared_sign(master_seed, replicate, component)
            ss = z * np.outer(_alternating(window.lengths[0]), _alternating(window.lengths[1]))
        else:
            ss = np.ones(window.lengths)
        return Realization(window, fc(uu, vv, ss), prov)

    raise TypeError(f"not a field spec: {spec!r}")


def sample_product_iid(window, master_seed, replicate, d=None) -> Realization:
    d = window.d if d is None else d
    return sample(ProductIID(d=d), window, master_seed, replicate)


def sample_chaos_field(tensor, window, master_seed, replicate) -> Realization:
    return sample(ChaosField(tensor), window, master_seed, replicate)


def sample_signflip(window, master_seed, replicate) -> Realization:
    return sample(SignFlipCocycle(), window, master_seed, replicate)


def sample_iid_field(window, master_seed, replicate, driver="gaussian") -> Realization:
    return sample(IIDField(d=window.d, driver=driver), window, master_seed, replicate)


def export_csv(realization: Realization, path):
    """Write cells as rows `i,j[,k],value` with 1-based indices."""
    vals = realization.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*(f"i{t+1}" for t in range(vals.ndim)), "value"])
        for idx in np.ndindex(*vals.shape):
            writer.writerow([*(i + 1 for i in idx), repr(float(vals[idx]))])


# ---------------------------------------------------------------------------
# local cell models (used by the truncation operator)


@dataclass(frozen=True)
class LocalModel:
    """A field whose cell value is a function of one driver per axis, times
    an optional global sign cocycle."""

    axis_driver: str
    sign_cocycle: bool
    cell: Callable  # cell(u, v) -> value, elementwise

    def nodes(self, count: int = 64):
        """Nodes and probability weights for integrating out one axis driver."""
        if self.axis_driver == "rademacher":
            return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        from scipy.special import roots_hermitenorm

        x, w = roots_hermitenorm(count)
        return x, w / w.sum()


def local_model(spec: FieldSpec) -> LocalModel:
    """The local description of a spec, or an error if it has none."""
    if isinstance(spec, ProductIID) and spec.d == 2:
        return LocalModel(spec.driver, False, lambda u, v: u * v)
    if isinstance(spec, SignFlipCocycle):
        return LocalModel("rademacher", True, lambda u, v: u * v)
    raise ValueError(f"spec has no local cell model: {spec!r}")


def truncated_cell_fn(spec: TruncatedLocal, node_count: int = 64) -> Callable:
    """The truncated-and-recentered cell function of a local spec.

    With g the base cell function and C the level, the new cell is

        g 1{|g|<=C}  -  (avg over u)  -  (avg over v)  +  (avg over both),

    the partial averages being over the axis drivers; by construction the
    result integrates to zero along either axis.  Partial averages are exact
    sums for Rademacher drivers and Gauss-Hermite sums for Gaussian ones.
    """
    model = local_model(spec.base)
    C = float(spec.bound)
    xs, ws = model.nodes(node_count)

    def clipped(u, v):
        g = model.cell(u, v)
        return np.where(np.abs(g) <= C, g, 0.0)

    # phi(v) = E_u[clipped], psi(u) = E_v[clipped], c = E_uv[clipped]
    def phi(v):
        v = np.asarray(v, dtype=np.float64)
        return np.tensordot(ws, clipped(xs[:, None], v[None, :]), axes=1).reshape(v.shape)

    def psi(u):
        u = np.asarray(u, dtype=np.float64)
        return np.tensordot(ws, clipped(u[None, :], xs[:, None]), axes=([0], [0])).reshape(u.shape)

    cc = float(ws @ clipped(xs[:, None], xs[None, :]) @ ws)

    def fc(u, v, s=1.0):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        core = clipped(u, v) - phi(v.ravel()).reshape(v.shape) - psi(u.ravel()).reshape(u.shape) + cc
        return np.asarray(s) * core

    return fc


# ---------------------------------------------------------------------------
# integer matrix parity


def torus_parity(n: int) -> tuple[int, int]:
    """Parities (a_n mod 2, c_n mod 2) of the n-th power of [[3,1],[2,1]].

    Computed over the integers with the power built up by repeated
    multiplication.  The expected pattern is a_n odd and c_n even for every
    n >= 0; callers check the returned pair against (1, 0).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    a, b, c, d = 1, 0, 0, 1
    for _ in range(n):
        a, b, c, d = 3 * a + c, 3 * b + d, 2 * a + c, 2 * b + d
    return a % 2, c % 2
