"""Reference limit laws for normalized block sums.

The laws that actually arise: centered normals, products of independent
standard normals, general Gaussian-chaos products, scale mixtures of
normals driven by an empirical variance sample, and convolutions of the
above.  Closed-form characteristic functions and (where they exist in
closed form) CDFs live here, including a self-contained modified Bessel
K0 used by the product-of-two-normals density K0(|x|)/pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .fields import CoeffTensor

_EULER = 0.5772156649015328606

# Series below the cut, asymptotic expansion above.  At the cut the series
# loses ~e^x * eps to cancellation (~1e-12 here) and the asymptotic series
# truncates with relative error ~e^(-2x) (~4e-8, i.e. ~3e-12 absolute), so
# both branches stay well inside 1e-10 absolute over [1e-6, 50].
_K0_CUT = 8.5


# ---------------------------------------------------------------------------
# law types


@dataclass(frozen=True)
class Normal:
    variance: float = 1.0

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError("variance must be positive and finite")


@dataclass(frozen=True)
class ProductOfNormals:
    """Product of d independent standard normals."""

    d: int = 2

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("d must be 2 or 3")


@dataclass(frozen=True)
class ChaosProduct:
    """Sum of lambda_(a,b,c) * N_a x N_b x N_c over the tensor entries, with
    one independent standard normal per (axis, order) pair."""

    tensor: CoeffTensor

    @property
    def d(self) -> int:
        return self.tensor.d


@dataclass(frozen=True)
class EtaMixture:
    """Normal scale mixture: eta * N with eta^2 drawn from a fixed sample."""

    eta_sq: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.eta_sq)
        object.__setattr__(self, "eta_sq", vals)
        if not vals:
            raise ValueError("mixture needs at least one variance sample")
        if any(v < 0 or not math.isfinite(v) for v in vals):
            raise ValueError("variance samples must be finite and >= 0")


@dataclass(frozen=True)
class Convolution:
    """Sum of independent draws from the part laws (cf = product of cfs)."""

    parts: tuple["LimitLaw", ...]

    def __post_init__(self):
        if len(self.parts) < 2:
            raise ValueError("convolution needs at least two parts")


LimitLaw = Union[Normal, ProductOfNormals, ChaosProduct, EtaMixture, Convolution]


@dataclass(frozen=True)
class CFGrid:
    """A characteristic function sampled on a t-grid.

    Values are the real part (all laws here are symmetric); `imag_abs`
    carries the magnitude of the monitored imaginary part when the grid
    came from an empirical estimate.
    """

    t: np.ndarray
    values: np.ndarray
    imag_abs: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape:
            raise ValueError("t and values must align")
        if np.any(np.abs(v) > 1 + 1e-9):
            raise ValueError("characteristic function values must lie in [-1, 1]")
        at_zero = v[t == 0.0]
        if at_zero.size and np.any(np.abs(at_zero - 1.0) > 1e-12):
            raise ValueError("cf must equal 1 at t = 0")


# ---------------------------------------------------------------------------
# Bessel K0


def _k0_series(x: np.ndarray) -> np.ndarray:
    q = 0.25 * x * x
    term = np.ones_like(x)
    i0 = np.ones_like(x)
    acc = np.zeros_like(x)
    h = 0.0
    for k in range(1, 64):
        term = term * q / (k * k)
        i0 += term
        h += 1.0 / k
        acc += term * h
        if np.all(term <= 1e-20 * i0):
            break
    return -(np.log(0.5 * x) + _EULER) * i0 + acc


def _k0_asymptotic(x: np.ndarray) -> np.ndarray:
    # K0(x) ~ sqrt(pi/2x) e^-x [1 - 1/(8x) + 9/(128x^2) - ...]; each term
    # multiplies by -(2k-1)^2/(8kx).  Stop per element at the smallest term.
    acc = np.ones_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 40):
        nxt = term * (-((2 * k - 1) ** 2) / (8.0 * k * x))
        active &= np.abs(nxt) < np.abs(term)
        if not active.any():
            break
        acc = np.where(active, acc + nxt, acc)
        term = nxt
    return np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) * acc


def bessel_k0(x):
    """Modified Bessel function K0 for x > 0 (scalar or array).

    Small-x power series and large-x asymptotic expansion, switched at
    x = 8.5; absolute accuracy is ~1e-12 over [1e-6, 50].
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (np.any(~np.isfinite(arr)) or np.any(arr <= 0.0)):
        raise ValueError("K0 requires finite x > 0")
    out = np.empty_like(arr)
    small = arr <= _K0_CUT
    if small.any():
        out[small] = _k0_series(arr[small])
    if (~small).any():
        out[~small] = _k0_asymptotic(arr[~small])
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def _int_k0_series(a: np.ndarray) -> np.ndarray:
    """integral_0^a K0(u) du for 0 <= a <= 3, by termwise integration of the
    K0 power series (the log endpoint integrates in closed form)."""
    a = np.asarray(a, dtype=np.float64)
    out = np.zeros_like(a)
    pos = a > 0.0
    if not pos.any():
        return out
    ap = a[pos]
    la = np.log(ap)
    acc = np.zeros_like(ap)
    ck = 1.0
    h = 0.0
    for k in range(0, 64):
        if k > 0:
            ck /= 4.0 * k * k
            h += 1.0 / k
        m = 2 * k + 1
        t = ck * ap**m / m * (math.log(2.0) - _EULER + h - la + 1.0 / m)
        acc += t
        if np.all(np.abs(t) <= 1e-20 * np.abs(acc)):
            break
    out[pos] = acc
    return out


@lru_cache(maxsize=None)
def _legendre_nodes(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _int_k0_tail(points: np.ndarray) -> np.ndarray:
    """integral_3^p K0 for each p in the sorted array `points` (all > 3)."""
    xg, wg = _legendre_nodes(32)
    edges = np.concatenate(([3.0], points))
    out = np.zeros(len(points))
    total = 0.0
    for i in range(len(points)):
        lo, hi = edges[i], edges[i + 1]
        if hi > lo:
            mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
            total += half * float(wg @ bessel_k0(mid + half * xg))
        out[i] = total
    return out


def bessel_cdf_many(x: np.ndarray) -> np.ndarray:
    """CDF of the product of two independent standard normals, vectorized."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    g = np.empty_like(ax)
    near = ax <= 3.0
    g[near] = _int_k0_series(ax[near])
    if (~near).any():
        far = ax[~near]
        order = np.argsort(far)
        vals = _int_k0_tail(far[order])
        back = np.empty_like(vals)
        back[order] = vals
        g[~near] = _int_k0_series(np.float64(3.0)) + back
    return 0.5 + np.sign(x) * g / np.pi


def density_product_two_normals(x):
    """Density K0(|x|)/pi of the product of two independent standard normals.

    The density diverges logarithmically at the origin, so x = 0 (or any
    zero entry) raises rather than returning a value.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr == 0.0):
        raise ValueError("density has a logarithmic singularity at 0")
    out = bessel_k0(np.abs(arr)) / np.pi
    return float(out) if (np.isscalar(x) or arr.ndim == 0) else out


# ---------------------------------------------------------------------------
# characteristic functions


@lru_cache(maxsize=None)
def _gh_nodes(n: int):
    from scipy.special import roots_hermitenorm

    x, w = roots_hermitenorm(n)
    return x, w / w.sum()


def cf_product_normals(t, d: int = 2):
    """Characteristic function of the product of d standard normals.

    d=2 has the closed form (1+t^2)^(-1/2).  d=3 is the Gaussian average
    E[exp(-t^2 X^2 Y^2 / 2)], evaluated by two-dimensional Gauss-Hermite
    quadrature with node doubling until the value settles below 1e-8.
    """
    if d == 2:
        tt = np.asarray(t, dtype=np.float64)
        out = (1.0 + tt * tt) ** -0.5
        return float(out) if (np.isscalar(t) or tt.ndim == 0) else out
    if d != 3:
        raise ValueError("d must be 2 or 3")
    tt = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = np.empty_like(tt)
    for i, ti in enumerate(tt):
        prev = None
        for n in (256, 512, 1024, 2048):
            x, w = _gh_nodes(n)
            sq = x * x
            val = float(w @ np.exp(-0.5 * ti * ti * np.outer(sq, sq)) @ w)
            if prev is not None and abs(val - prev) < 1e-8:
                break
            prev = val
        out[i] = val
    return float(out[0]) if (np.isscalar(t) or np.asarray(t).ndim == 0) else out


def cf_eta_mixture(eta_sq, t):
    """Average of exp(-eta^2 t^2 / 2) over an empirical variance sample."""
    eta = np.asarray(eta_sq, dtype=np.float64)
    if eta.size == 0:
        raise ValueError("empty variance sample")
    if np.any(eta < 0):
        raise ValueError("variance samples must be >= 0")
    tt = np.asarray(t, dtype=np.float64)
    vals = np.exp(-0.5 * np.multiply.outer(tt * tt, eta)).mean(axis=-1)
    return float(vals) if tt.ndim == 0 else vals


def cf_limit(law: LimitLaw, t):
    """Closed-form cf of a law on a t-grid, where one exists."""
    tt = np.asarray(t, dtype=np.float64)
    if isinstance(law, Normal):
        out = np.exp(-0.5 * law.variance * tt * tt)
    elif isinstance(law, ProductOfNormals):
        out = np.atleast_1d(cf_product_normals(tt, law.d))
    elif isinstance(law, EtaMixture):
        out = np.atleast_1d(cf_eta_mixture(law.eta_sq, tt))
    elif isinstance(law, Convolution):
        out = np.ones_like(np.atleast_1d(tt))
        for part in law.parts:
            out = out * np.atleast_1d(cf_limit(part, tt))
    else:
        raise ValueError(f"no closed-form cf for {type(law).__name__}")
    out = np.asarray(out, dtype=np.float64)
    return float(out.reshape(-1)[0]) if tt.ndim == 0 else out.reshape(tt.shape)


# ---------------------------------------------------------------------------
# CDFs


def _normal_cdf(x, variance):
    from scipy.special import ndtr

    return ndtr(np.asarray(x, dtype=np.float64) / math.sqrt(variance))


def cdf_limit(law: LimitLaw, x):
    """CDF of a law with an exact evaluation: Normal or ProductOfNormals(2).

    The product CDF integrates the density K0(|u|)/pi: a closed-form series
    for the part near the (integrable) singularity at 0, panel quadrature
    beyond.  Other laws have no closed CDF here and raise.
    """
    arr = np.asarray(x, dtype=np.float64)
    if isinstance(law, Normal):
        out = _normal_cdf(arr, law.variance)
    elif isinstance(law, ProductOfNormals) and law.d == 2:
        out = bessel_cdf_many(np.atleast_1d(arr)).reshape(arr.shape)
    else:
        raise ValueError(f"no exact cdf for {law!r}")
    return float(out) if (np.isscalar(x) or arr.ndim == 0) else out


# ---------------------------------------------------------------------------
# sampling


def sample_limit(law: LimitLaw, n: int, gen: np.random.Generator) -> np.ndarray:
    """n independent draws from a reference law."""
    if n < 1:
        raise ValueError("need at least one draw")
    if isinstance(law, Normal):
        return math.sqrt(law.variance) * gen.standard_normal(n)
    if isinstance(law, ProductOfNormals):
        out = gen.standard_normal(n)
        for _ in range(law.d - 1):
            out = out * gen.standard_normal(n)
        return out
    if isinstance(law, ChaosProduct):
        tensor = law.tensor
        orders = [sorted({idx[t] for idx, _ in tensor.entries}) for t in range(tensor.d)]
        draws = [{a: gen.standard_normal(n) for a in axis_orders} for axis_orders in orders]
        out = np.zeros(n)
        for idx, lam in tensor.entries:
            term = np.full(n, lam)
            for t, a in enumerate(idx):
                term = term * draws[t][a]
            out += term
        return out
    if isinstance(law, EtaMixture):
        eta = np.asarray(law.eta_sq, dtype=np.float64)
        picks = gen.integers(0, len(eta), size=n)
        return np.sqrt(eta[picks]) * gen.standard_normal(n)
    if isinstance(law, Convolution):
        out = np.zeros(n)
        for part in law.parts:
            out += sample_limit(part, n, gen)
        return out
    raise TypeError(f"not a limit law: {law!r}")


# ---------------------------------------------------------------------------
# serialization (for experiment configs)


def law_to_json(law: LimitLaw) -> dict:
    if isinstance(law, Normal):
        return {"kind": "normal", "variance": law.variance}
    if isinstance(law, ProductOfNormals):
        return {"kind": "product_normals", "d": law.d}
    if isinstance(law, ChaosProduct):
        return {
            "kind": "chaos_product",
            "tensor": {
                "d": law.tensor.d,
                "entries": [{"index": list(i), "coeff": lam} for i, lam in law.tensor.entries],
            },
        }
    if isinstance(law, EtaMixture):
        return {"kind": "eta_mixture", "eta_sq": list(law.eta_sq)}
    if isinstance(law, Convolution):
        return {"kind": "convolution", "parts": [law_to_json(p) for p in law.parts]}
    raise TypeError(f"not a limit law: {law!r}")


def law_from_json(obj: dict) -> LimitLaw:
    kind = obj.get("kind")
    if kind == "normal":
        return Normal(variance=float(obj.get("variance", 1.0)))
    if kind == "product_normals":
        return ProductOfNormals(d=int(obj.get("d", 2)))
    if kind == "chaos_product":
        t = obj["tensor"]
        entries = tuple((tuple(e["index"]), float(e["coeff"])) for e in t["entries"])
        return ChaosProduct(CoeffTensor(entries, t["d"]))
    if kind == "eta_mixture":
        return EtaMixture(tuple(obj["eta_sq"]))
    if kind == "convolution":
        return Convolution(tuple(law_from_json(p) for p in obj["parts"]))
    raise ValueError(f"unknown law kind {kind!r}")
