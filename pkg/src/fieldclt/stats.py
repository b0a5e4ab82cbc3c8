"""Monte Carlo harness for normalized block sums of lattice fields.

Replicate statistics (normalized sums and row-variance statistics) are
generated through counter-based streams, so every replicate is a pure
function of (spec, master seed, replicate id) no matter how the work is
scheduled.  Product-structured specs use a factorized per-axis path whose
cost is the window side lengths, not the cell count; everything else
materializes cells.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fields, limitlaw
from .fields import (
    ChaosField,
    Composite,
    FieldSpec,
    IIDField,
    ProductIID,
    Realization,
    SignFlipCocycle,
    TruncatedLocal,
    Window,
    ZeroField,
)
from .limitlaw import CFGrid


# ---------------------------------------------------------------------------
# sample containers


@dataclass(frozen=True)
class EmpiricalDist:
    """A sorted sample with provenance."""

    samples: np.ndarray
    digest: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("need a one-dimensional sample of size >= 2")
        if np.any(np.diff(arr) < 0):
            raise ValueError("samples must be sorted ascending")

    @property
    def count(self) -> int:
        return int(self.samples.size)


@dataclass
class SumReport:
    """Replicate statistics for one spec/window/statistic combination."""

    spec: FieldSpec
    window: Window
    statistic: str
    replicates: int
    master_seed: int
    values: np.ndarray  # by replicate id

    def dist(self) -> EmpiricalDist:
        return EmpiricalDist(np.sort(self.values), fields.spec_digest(self.spec))

    def moments(self) -> dict:
        v = self.values
        return {
            "mean": float(v.mean()),
            "variance": float(v.var()),
            "fourth_moment": float((v**4).mean()),
            "min": float(v.min()),
            "max": float(v.max()),
        }


# ---------------------------------------------------------------------------
# statistics on one realization


def partial_sum(r: Realization) -> float:
    """Sum of all cells, divided by the square root of the cell count."""
    return float(r.values.sum() / math.sqrt(r.window.cell_count))


def v_statistic(r: Realization) -> float:
    """Average of squared normalized row sums (2-d windows only).

    Rows run along the first axis; each row's cells are summed, scaled by
    1/sqrt(row length), squared, and the squares averaged over rows.
    """
    if r.window.d != 2:
        raise ValueError("the row-variance statistic is defined for 2-d windows")
    n = r.window.lengths[1]
    rows = r.values.sum(axis=1) / math.sqrt(n)
    return float(np.mean(rows * rows))


# ---------------------------------------------------------------------------
# factorized per-replicate paths


def has_fast_path(spec: FieldSpec, statistic: str = "partial_sum") -> bool:
    if isinstance(spec, (ProductIID, ChaosField, SignFlipCocycle, ZeroField)):
        return True
    if isinstance(spec, Composite):
        return all(has_fast_path(p, statistic) for p in spec.parts)
    return False


def _fast_partial_sum(spec, window, seed, rep, component=0) -> float:
    # normalization happens once, by sqrt(cell count), matching the order of
    # operations of the cell-materializing path as closely as the algebra allows
    if isinstance(spec, ProductIID):
        prod = 1.0
        for t, n in enumerate(window.lengths):
            prod *= fields.axis_values(spec.driver, seed, rep, t, n, component).sum()
        return float(prod / math.sqrt(window.cell_count))
    if isinstance(spec, ChaosField):
        d = window.d
        orders = [sorted({idx[t] for idx, _ in spec.tensor.entries}) for t in range(d)]
        sums = []
        for t, n in enumerate(window.lengths):
            xi = fields.axis_values(spec.driver, seed, rep, t, n, component)
            sums.append({a: fields.hermite_orthonormal(a, xi).sum() / math.sqrt(n) for a in orders[t]})
        total = 0.0
        for idx, lam in spec.tensor.entries:
            term = lam
            for t, a in enumerate(idx):
                term *= sums[t][a]
            total += term
        return float(total)
    if isinstance(spec, SignFlipCocycle):
        l1, l2 = window.lengths
        x = fields.axis_values("rademacher", seed, rep, 0, l1, component)
        y = fields.axis_values("rademacher", seed, rep, 1, l2, component)
        z = fields.shared_sign(seed, rep, component)
        a = (fields._alternating(l1) * x).sum()
        b = (fields._alternating(l2) * y).sum()
        # every intermediate is an integer-valued float, so this equals the
        # cell-materializing path bit for bit
        return float(z * a * b / math.sqrt(window.cell_count))
    if isinstance(spec, ZeroField):
        return 0.0
    if isinstance(spec, Composite):
        return _fast_partial_sum(spec.parts[0], window, seed, rep, 1) + _fast_partial_sum(
            spec.parts[1], window, seed, rep, 2
        )
    raise ValueError(f"no factorized path for {spec!r}")


def _fast_row_sums(spec, window, seed, rep, component=0) -> np.ndarray:
    """Per-row cell sums along the first axis, without materializing cells."""
    l1, l2 = window.lengths
    if isinstance(spec, ProductIID):
        u = fields.axis_values(spec.driver, seed, rep, 0, l1, component)
        v = fields.axis_values(spec.driver, seed, rep, 1, l2, component)
        return u * v.sum()
    if isinstance(spec, ChaosField):
        orders0 = sorted({idx[0] for idx, _ in spec.tensor.entries})
        orders1 = sorted({idx[1] for idx, _ in spec.tensor.entries})
        xi = fields.axis_values(spec.driver, seed, rep, 0, l1, component)
        zeta = fields.axis_values(spec.driver, seed, rep, 1, l2, component)
        h0 = {a: fields.hermite_orthonormal(a, xi) for a in orders0}
        s1 = {b: fields.hermite_orthonormal(b, zeta).sum() for b in orders1}
        rows = np.zeros(l1)
        for (a, b), lam in spec.tensor.entries:
            rows += lam * s1[b] * h0[a]
        return rows
    if isinstance(spec, SignFlipCocycle):
        x = fields.axis_values("rademacher", seed, rep, 0, l1, component)
        y = fields.axis_values("rademacher", seed, rep, 1, l2, component)
        z = fields.shared_sign(seed, rep, component)
        return z * (fields._alternating(l1) * x) * (fields._alternating(l2) * y).sum()
    if isinstance(spec, ZeroField):
        return np.zeros(l1)
    if isinstance(spec, Composite):
        return _fast_row_sums(spec.parts[0], window, seed, rep, 1) + _fast_row_sums(
            spec.parts[1], window, seed, rep, 2
        )
    raise ValueError(f"no factorized path for {spec!r}")


def _fast_statistic(spec, window, statistic, seed, rep, component=0) -> float:
    if statistic == "partial_sum":
        return _fast_partial_sum(spec, window, seed, rep, component)
    if statistic == "v_statistic":
        if window.d != 2:
            raise ValueError("the row-variance statistic is defined for 2-d windows")
        rows = _fast_row_sums(spec, window, seed, rep, component)
        rows = rows / math.sqrt(window.lengths[1])
        return float(np.mean(rows * rows))
    raise ValueError(f"unknown statistic {statistic!r}")


def _generic_statistic(spec, window, statistic, seed, rep, component=0) -> float:
    if isinstance(spec, Composite):
        # parts are driven by disjoint streams, so the statistic decomposes
        # linearly for sums; rows are combined before squaring for V.
        if statistic == "partial_sum":
            return _generic_statistic(spec.parts[0], window, statistic, seed, rep, 1) + (
                _generic_statistic(spec.parts[1], window, statistic, seed, rep, 2)
            )
        a = fields.sample(spec.parts[0], window, seed, rep, component=1)
        b = fields.sample(spec.parts[1], window, seed, rep, component=2)
        merged = Realization(window, a.values + b.values, a.provenance)
        return v_statistic(merged) if statistic == "v_statistic" else partial_sum(merged)
    r = fields.sample(spec, window, seed, rep, component)
    if statistic == "partial_sum":
        return partial_sum(r)
    if statistic == "v_statistic":
        return v_statistic(r)
    raise ValueError(f"unknown statistic {statistic!r}")


def replicate_stats(
    spec: FieldSpec,
    window: Window,
    statistic: str,
    replicates: int,
    master_seed: int,
    threads: int = 1,
    path: str = "auto",
    component: int = 0,
) -> SumReport:
    """Compute one statistic for `replicates` independent field replicates.

    path: "auto" picks the factorized route when the spec supports it,
    "fast" insists on it, "generic" always materializes cells.  Results are
    bit-identical for any thread count: replicate r only ever sees its own
    streams and writes its own slot.
    """
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    if fields.dimension(spec) != window.d:
        raise ValueError("spec dimension does not match the window")
    if path not in ("auto", "fast", "generic"):
        raise ValueError(f"unknown path {path!r}")
    use_fast = has_fast_path(spec, statistic) if path == "auto" else (path == "fast")
    compute = _fast_statistic if use_fast else _generic_statistic

    out = np.empty(replicates)

    def run_chunk(lo, hi):
        for rep in range(lo, hi):
            out[rep] = compute(spec, window, statistic, master_seed, rep, component)

    if threads <= 1:
        run_chunk(0, replicates)
    else:
        chunk = max(1, math.ceil(replicates / (threads * 4)))
        bounds = [(lo, min(lo + chunk, replicates)) for lo in range(0, replicates, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: run_chunk(*b), bounds))

    return SumReport(spec, window, statistic, replicates, master_seed, out)


# ---------------------------------------------------------------------------
# distances and transforms


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    pool = np.concatenate([a, b])
    fa = np.searchsorted(a, pool, side="right") / a.size
    fb = np.searchsorted(b, pool, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_one_sample(samples: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between an empirical CDF and a CDF callable."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    f = np.asarray(cdf(xs), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_distance(dist, reference) -> float:
    """KS distance of a sample against a reference.

    The reference is either another EmpiricalDist (two-sample) or a limit
    law with an exact CDF (one-sample); laws without one raise and should
    be compared through a drawn reference sample instead.
    """
    samples = dist.samples if isinstance(dist, EmpiricalDist) else np.asarray(dist)
    if isinstance(reference, EmpiricalDist):
        return ks_two_sample(samples, reference.samples)
    return ks_one_sample(samples, lambda x: limitlaw.cdf_limit(reference, x))


def ecf(samples, t_grid) -> CFGrid:
    """Empirical characteristic function on a grid.

    Returns the real part (sample average of cos(t x)); the imaginary
    part vanishes for symmetric laws and its magnitude is kept for
    monitoring.
    """
    xs = np.asarray(samples.samples if isinstance(samples, EmpiricalDist) else samples)
    tt = np.asarray(t_grid, dtype=np.float64)
    prod = np.multiply.outer(tt, xs)
    re = np.cos(prod).mean(axis=1)
    im = np.abs(np.sin(prod).mean(axis=1))
    return CFGrid(tt, re, im)


# ---------------------------------------------------------------------------
# truncation operator


def truncate_fC(spec: FieldSpec, level: float) -> TruncatedLocal:
    """Truncate a local spec's cell function at `level` and recenter it with
    the three one-sided partial averages, keeping it a martingale difference."""
    return TruncatedLocal(spec, float(level))


def truncation_martingale_defect(trunc: TruncatedLocal, node_count: int = 64) -> float:
    """Largest magnitude of a one-axis partial average of the truncated cell.

    Zero (to rounding) certifies the martingale-difference property: the
    cell integrates to nothing along either single axis, whatever the other
    coordinates are.
    """
    model = fields.local_model(trunc.base)
    fc = fields.truncated_cell_fn(trunc, node_count)
    xs, ws = model.nodes(node_count)
    signs = (-1.0, 1.0) if model.sign_cocycle else (1.0,)
    worst = 0.0
    for s in signs:
        # integrate over u at every v node, then over v at every u node
        over_u = np.tensordot(ws, fc(xs[:, None], xs[None, :], s), axes=1)
        over_v = np.tensordot(ws, fc(xs[None, :], xs[:, None], s), axes=([0], [0]))
        worst = max(worst, float(np.max(np.abs(over_u))), float(np.max(np.abs(over_v))))
    return worst


def truncation_norms(trunc: TruncatedLocal, node_count: int = 64) -> tuple[float, float]:
    """(||f - f_C||_2, ||f 1{|f|>C}||_2) for a truncated local spec.

    The tail norm uses the exact atom sum for Rademacher drivers and the
    product-of-normals density for the Gaussian product field (the cell
    there is a product of two independent normals, so E[f^2; |f|>C] is a
    one-dimensional smooth integral of x^2 K0(x)).
    """
    from scipy.integrate import quad

    model = fields.local_model(trunc.base)
    C = trunc.bound
    xs, ws = model.nodes(node_count)

    if model.axis_driver == "rademacher":
        uu, vv = np.meshgrid(xs, xs, indexing="ij")
        wts = np.outer(ws, ws)
        g = model.cell(uu, vv)
        tail_sq = float((wts * g * g * (np.abs(g) > C)).sum())
    else:
        hi = max(C + 60.0, 80.0)
        integrand = lambda u: 2.0 / np.pi * u * u * limitlaw.bessel_k0(u)
        if C < 1.0:
            # keep quad away from the logarithmic spike of K0 near zero
            head, _ = quad(integrand, C, 1.0, limit=200)
            rest, _ = quad(integrand, 1.0, hi, limit=200)
            tail_sq = head + rest
        else:
            tail_sq, _ = quad(integrand, C, hi, limit=200)

    # f - f_C = f 1{|f|>C} + phi(v) + psi(u) - c; expand the square with
    # every piece evaluated on the quadrature nodes.
    fc = fields.truncated_cell_fn(trunc, node_count)
    uu, vv = np.meshgrid(xs, xs, indexing="ij")
    wts = np.outer(ws, ws)
    g = model.cell(uu, vv)
    correction = np.where(np.abs(g) <= C, g, 0.0) - fc(uu, vv, 1.0)  # phi + psi - c
    cross = float((wts * np.where(np.abs(g) > C, g, 0.0) * correction).sum())
    corr_sq = float((wts * correction * correction).sum())
    diff_sq = max(tail_sq + 2.0 * cross + corr_sq, 0.0)
    return math.sqrt(diff_sq), math.sqrt(max(tail_sq, 0.0))


# ---------------------------------------------------------------------------
# structural checks


def queue_condition_norm(spec: FieldSpec, ell: int) -> float:
    """L2 norm of the origin cell conditioned on (second-axis past at lag
    ell) joined with the first-axis shift invariants.

    Identified exactly per built-in spec.  For independent cells the
    conditioning algebra is independent of the origin cell once ell >= 1,
    so the norm is 0; at ell = 0 the cell itself is measurable.  For the
    product and sign-flip fields the shift invariants contain the whole
    second-axis driver sequence, so the join recovers the cell and the
    norm never decays.
    """
    if ell < 0:
        raise ValueError("lag must be >= 0")
    if isinstance(spec, IIDField):
        return 1.0 if ell == 0 else 0.0
    if isinstance(spec, SignFlipCocycle):
        return 1.0
    if isinstance(spec, ProductIID) and spec.d == 2:
        return 1.0
    raise ValueError(f"tail conditioning norm not identified for {spec!r}")


def convolution_check(
    g: FieldSpec,
    h: FieldSpec,
    window: Window,
    replicates: int,
    master_seed: int,
    t_grid,
    threads: int = 1,
) -> dict:
    """Factorization of the composite sum's cf into its parts' cfs.

    Samples the two parts on the disjoint streams the composite field would
    give them, so composite sums are exactly part sums added replicate by
    replicate; returns the three ECF grids and the largest deviation
    |ecf_composite - ecf_g * ecf_h| over the grid.
    """
    tt = np.asarray(t_grid, dtype=np.float64)
    rep_g = replicate_stats(g, window, "partial_sum", replicates, master_seed,
                            threads=threads, component=1)
    rep_h = replicate_stats(h, window, "partial_sum", replicates, master_seed,
                            threads=threads, component=2)
    sums_g = rep_g.values
    sums_h = rep_h.values
    sums = sums_g + sums_h
    cf_c = ecf(sums, tt)
    cf_g = ecf(sums_g, tt)
    cf_h = ecf(sums_h, tt)
    gap = float(np.max(np.abs(cf_c.values - cf_g.values * cf_h.values)))
    return {
        "t": tt,
        "ecf_composite": cf_c,
        "ecf_g": cf_g,
        "ecf_h": cf_h,
        "max_factorization_gap": gap,
    }
