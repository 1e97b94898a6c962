"""Discrete weighted one-dimensional metric measure spaces.

A space is a grid of strictly increasing nodes carrying lumped masses plus
interface weights (the density sampled between adjacent nodes).  The model
catalog covers the geometries exercised by the verification suite: a flat
interval, the Gaussian line, the e^{x^2/2}-weighted line (infinite measure,
truncated), a surface-of-revolution meridian with profile e^{-sqrt|t|}, the
hyperbolic-plane radial problem, and a quartic perturbation of the Gaussian.

Conventions
-----------
* lumped masses: trapezoid cell masses split equally between the two cell
  endpoints, so the total mass is the exact trapezoid integral of the density
  and every node mass is positive even where the density vanishes at an end;
* interface weights: arithmetic mean of the adjacent density samples, so the
  perimeter of a cut estimates the continuum density at the cut and the
  discrete coarea identity is exact;
* grid ends carry no interface weight: an index interval touching an end has
  only its interior cut(s) in its perimeter.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "BoundaryCondition",
    "MeasureMode",
    "SpaceModel",
    "parse_descriptor",
    "WeightedGrid",
    "DiscreteSet",
    "build_space",
    "interval_set",
    "complement_set",
    "indicator",
    "measure_and_perimeter",
    "total_variation",
    "interface_gradients",
    "lp_norm",
    "coarea_decompose",
    "coarea_integral",
    "CheegerResult",
    "cheeger_search",
    "revolution_profile",
    "revolution_arclength",
    "MODEL_DEFAULTS",
]


class BoundaryCondition(enum.Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


class MeasureMode(enum.Enum):
    PROBABILITY = "probability"
    FINITE = "finite"
    INFINITE_TRUNCATED = "infinite_truncated"


@dataclass(frozen=True)
class SpaceModel:
    """Model descriptor: a catalog name plus its numeric parameters."""

    name: str
    params: dict

    def descriptor(self) -> str:
        if not self.params:
            return self.name
        items = ",".join(f"{k}={_fmt_num(v)}" for k, v in self.params.items())
        return f"{self.name}:{items}"


def _fmt_num(v) -> str:
    if isinstance(v, (int, np.integer)) or (isinstance(v, float) and v.is_integer()):
        return str(int(v))
    return repr(float(v))


def parse_descriptor(text: str) -> SpaceModel:
    """Parse ``name:key=value,key=value`` into a SpaceModel."""
    text = text.strip()
    if not text:
        raise ValueError("empty space descriptor")
    name, _, rest = text.partition(":")
    params: dict = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed descriptor item {item!r} in {text!r}")
            key = key.strip()
            try:
                num = float(val)
            except ValueError as exc:
                raise ValueError(f"non-numeric value in descriptor item {item!r}") from exc
            params[key] = int(num) if key == "n" else num
    if name not in MODEL_DEFAULTS:
        raise ValueError(f"unknown space model {name!r}")
    return SpaceModel(name, params)


@dataclass(frozen=True, eq=False)
class WeightedGrid:
    """Discretized weighted 1D space (immutable after construction)."""

    nodes: np.ndarray
    masses: np.ndarray
    iface_weights: np.ndarray
    density: np.ndarray
    bc: BoundaryCondition
    measure_mode: MeasureMode
    K_tag: float | None
    model: SpaceModel
    raw_total_mass: float

    def __post_init__(self):
        n = self.nodes.size
        if n < 2:
            raise ValueError("grid needs at least two nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.masses <= 0) or np.any(self.iface_weights <= 0):
            raise ValueError("masses and interface weights must be positive")
        if self.measure_mode is MeasureMode.PROBABILITY:
            total = float(np.sum(self.masses))
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"probability grid has total mass {total}")

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def conductances(self) -> np.ndarray:
        """Per-interface couplings w/dx entering the Dirichlet form."""
        return self.iface_weights / self.dx

    def prefix_masses(self) -> np.ndarray:
        """prefix[k] = mass of nodes with index < k, for k = 0..n."""
        out = np.empty(self.n + 1)
        out[0] = 0.0
        np.cumsum(self.masses, out=out[1:])
        return out

    def cut_weights(self) -> np.ndarray:
        """cutw[k] = perimeter contribution of a cut at position k (between
        nodes k-1 and k); zero at the two grid ends."""
        out = np.zeros(self.n + 1)
        out[1:-1] = self.iface_weights
        return out

    def interface_positions(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def median_cut(self) -> int:
        """Cut index splitting the mass as close to half as possible."""
        prefix = self.prefix_masses()
        return int(np.argmin(np.abs(prefix - 0.5 * self.total_mass)))

    def scaled(self, alpha: float, beta: float) -> "WeightedGrid":
        """Scale distances by alpha and the measure by beta."""
        if alpha <= 0 or beta <= 0:
            raise ValueError("scaling factors must be positive")
        model = replace(
            self.model, params={**self.model.params, "alpha": alpha, "beta": beta}
        )
        return WeightedGrid(
            nodes=self.nodes * alpha,
            masses=self.masses * beta,
            iface_weights=self.iface_weights * (beta / alpha),
            density=self.density * (beta / alpha),
            bc=self.bc,
            measure_mode=self.measure_mode,
            K_tag=None if self.K_tag is None else self.K_tag / alpha**2,
            model=model,
            raw_total_mass=self.raw_total_mass * beta,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "mass", "iface_weight"])
            for i in range(self.n):
                w = repr(float(self.iface_weights[i])) if i < self.n - 1 else ""
                writer.writerow([repr(float(self.nodes[i])), repr(float(self.masses[i])), w])


def _grid_from_density(
    nodes, density, bc, mode, K_tag, model, normalize
) -> WeightedGrid:
    nodes = np.asarray(nodes, dtype=float)
    density = np.asarray(density, dtype=float)
    dx = np.diff(nodes)
    cells = dx * 0.5 * (density[:-1] + density[1:])
    masses = np.zeros_like(nodes)
    masses[:-1] += 0.5 * cells
    masses[1:] += 0.5 * cells
    iface = 0.5 * (density[:-1] + density[1:])
    raw_total = float(np.sum(cells))
    if normalize:
        masses = masses / raw_total
        iface = iface / raw_total
        density = density / raw_total
    return WeightedGrid(
        nodes=nodes,
        masses=masses,
        iface_weights=iface,
        density=density,
        bc=bc,
        measure_mode=mode,
        K_tag=K_tag,
        model=model,
        raw_total_mass=raw_total,
    )


# ---------------------------------------------------------------------------
# model catalog


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _build_uniform(L: float, n: int) -> WeightedGrid:
    _require(L > 0, f"uniform model needs L > 0, got {L}")
    nodes = np.linspace(0.0, L, n)
    density = np.full(n, 1.0 / L)
    return _grid_from_density(
        nodes, density, BoundaryCondition.NEUMANN, MeasureMode.PROBABILITY,
        0.0, SpaceModel("uniform", {"L": L, "n": n}), normalize=True,
    )


def _build_gaussian(K: float, R: float, n: int) -> WeightedGrid:
    _require(K > 0, f"gaussian model needs K > 0, got {K}")
    _require(R > 0, f"gaussian model needs R > 0, got {R}")
    nodes = np.linspace(-R, R, n)
    density = math.sqrt(K / (2.0 * math.pi)) * np.exp(-0.5 * K * nodes**2)
    return _grid_from_density(
        nodes, density, BoundaryCondition.NEUMANN, MeasureMode.PROBABILITY,
        K, SpaceModel("gaussian", {"K": K, "R": R, "n": n}), normalize=True,
    )


def _build_perturbed_gaussian(eps: float, R: float, n: int) -> WeightedGrid:
    _require(eps >= 0, f"perturbed_gaussian needs eps >= 0, got {eps}")
    _require(R > 0, f"perturbed_gaussian needs R > 0, got {R}")
    nodes = np.linspace(-R, R, n)
    # potential x^2/2 + eps x^4 has second derivative 1 + 12 eps x^2 >= 1,
    # so the curvature tag stays 1 for every eps >= 0
    density = np.exp(-(0.5 * nodes**2 + eps * nodes**4))
    return _grid_from_density(
        nodes, density, BoundaryCondition.NEUMANN, MeasureMode.PROBABILITY,
        1.0, SpaceModel("perturbed_gaussian", {"eps": eps, "R": R, "n": n}),
        normalize=True,
    )


def _build_expx2(R: float, n: int) -> WeightedGrid:
    _require(R > 0, f"expx2 model needs R > 0, got {R}")
    nodes = np.linspace(-R, R, n)
    density = np.exp(0.5 * nodes**2)
    return _grid_from_density(
        nodes, density, BoundaryCondition.DIRICHLET, MeasureMode.INFINITE_TRUNCATED,
        -1.0, SpaceModel("expx2", {"R": R, "n": n}), normalize=False,
    )


def _build_hyperbolic_radial(R: float, n: int) -> WeightedGrid:
    _require(R > 0, f"hyperbolic_radial model needs R > 0, got {R}")
    nodes = np.linspace(0.0, R, n)
    density = 2.0 * math.pi * np.sinh(nodes)
    return _grid_from_density(
        nodes, density, BoundaryCondition.DIRICHLET, MeasureMode.FINITE,
        -1.0, SpaceModel("hyperbolic_radial", {"R": R, "n": n}), normalize=False,
    )


# Even C^2 profile for the revolution model: e^{-sqrt|t|} outside |t| <= 1,
# inside an even quartic matching value and two derivatives at |t| = 1.
_REV_A = 11.0 / 8.0 / math.e
_REV_B = -0.5 / math.e
_REV_C = 0.125 / math.e


def revolution_profile(t):
    """Return (F, F', F'') for the revolution meridian profile.

    F(t) = e^{-sqrt|t|} for |t| > 1 and the even quartic
    (11/8 - t^2/2 + t^4/8)/e on |t| <= 1; the pieces match to second order
    at |t| = 1 and F > 0 everywhere.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    outer = a > 1.0
    s = np.sqrt(np.where(outer, a, 1.0))
    F_out = np.exp(-s)
    F = np.where(outer, F_out, _REV_A + _REV_B * t * t + _REV_C * t**4)
    Fp_out = -np.sign(t) * F_out / (2.0 * s)
    Fp = np.where(outer, Fp_out, 2.0 * _REV_B * t + 4.0 * _REV_C * t**3)
    Fpp_out = F_out * (s + 1.0) / (4.0 * s**3)
    Fpp = np.where(outer, Fpp_out, 2.0 * _REV_B + 12.0 * _REV_C * t * t)
    if F.ndim == 0:
        return float(F), float(Fp), float(Fpp)
    return F, Fp, Fpp


def revolution_speed(t):
    """Meridian arclength element sqrt(1 + F'(t)^2)."""
    _, Fp, _ = revolution_profile(t)
    return np.sqrt(1.0 + Fp * Fp)


def revolution_arclength(x: float) -> float:
    """Arclength along the meridian from t=0 to t=x (x >= 0)."""
    from scipy.integrate import quad

    _require(x >= 0, "arclength wants x >= 0")
    pieces = [(0.0, min(x, 1.0))]
    if x > 1.0:
        pieces.append((1.0, x))
    total = 0.0
    for lo, hi in pieces:
        if hi > lo:
            val, _ = quad(lambda u: float(revolution_speed(u)), lo, hi, limit=200)
            total += val
    return total


def _build_revolution(T: float, n: int) -> WeightedGrid:
    _require(T > 0, f"revolution model needs T > 0, got {T}")
    t = np.linspace(-T, T, n)
    mid = 0.5 * (t[:-1] + t[1:])
    g_node = revolution_speed(t)
    g_mid = revolution_speed(mid)
    # arclength coordinate: per-cell Simpson of sqrt(1+F'^2)
    dcell = (np.diff(t) / 6.0) * (g_node[:-1] + 4.0 * g_mid + g_node[1:])
    nodes = np.concatenate([[0.0], np.cumsum(dcell)])
    nodes -= nodes[n // 2]  # center the arclength coordinate
    F, _, _ = revolution_profile(t)
    density = 2.0 * math.pi * F  # circumference of the latitude circle
    grid = _grid_from_density(
        nodes, density, BoundaryCondition.NEUMANN, MeasureMode.FINITE,
        -0.5, SpaceModel("revolution", {"T": T, "n": n}), normalize=False,
    )
    assert np.all(F > 0), "revolution profile must stay positive"
    return grid


MODEL_DEFAULTS: dict[str, dict] = {
    "uniform": {"L": math.pi, "n": 2001},
    "gaussian": {"K": 1.0, "R": 8.0, "n": 4001},
    "perturbed_gaussian": {"eps": 0.0, "R": 8.0, "n": 4001},
    "expx2": {"R": 4.0, "n": 2001},
    "hyperbolic_radial": {"R": 20.0, "n": 4001},
    "revolution": {"T": 40.0, "n": 8001},
}

_BUILDERS = {
    "uniform": _build_uniform,
    "gaussian": _build_gaussian,
    "perturbed_gaussian": _build_perturbed_gaussian,
    "expx2": _build_expx2,
    "hyperbolic_radial": _build_hyperbolic_radial,
    "revolution": _build_revolution,
}


def build_space(model, **overrides) -> WeightedGrid:
    """Build a grid from a SpaceModel or a descriptor string.

    Keyword overrides (e.g. ``n=8001``) replace descriptor parameters.
    """
    if isinstance(model, str):
        model = parse_descriptor(model)
    params = {**MODEL_DEFAULTS[model.name], **model.params, **overrides}
    if "n" in params:
        params["n"] = int(params["n"])
        _require(params["n"] >= 2, f"need at least 2 nodes, got n={params['n']}")
    return _BUILDERS[model.name](**params)


# ---------------------------------------------------------------------------
# sets, perimeter, total variation, coarea


@dataclass(frozen=True)
class DiscreteSet:
    """Union of disjoint, non-adjacent half-open index intervals."""

    intervals: tuple
    measure: float
    perimeter: float


def _normalize_intervals(intervals, n: int):
    ivs = sorted((int(a), int(b)) for a, b in intervals if a != b)
    for a, b in ivs:
        if not (0 <= a < b <= n):
            raise ValueError(f"interval ({a},{b}) out of range for n={n}")
    merged: list = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            if a < merged[-1][1]:
                raise ValueError("overlapping index intervals")
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return tuple(merged)


def make_set(grid: WeightedGrid, intervals) -> DiscreteSet:
    ivs = _normalize_intervals(intervals, grid.n)
    prefix = grid.prefix_masses()
    cutw = grid.cut_weights()
    measure = sum(prefix[b] - prefix[a] for a, b in ivs)
    perimeter = sum(cutw[a] + cutw[b] for a, b in ivs)
    return DiscreteSet(ivs, float(measure), float(perimeter))


def interval_set(grid: WeightedGrid, a: int, b: int) -> DiscreteSet:
    """Index interval [a, b) as a DiscreteSet."""
    return make_set(grid, [(a, b)])


def complement_set(grid: WeightedGrid, dset: DiscreteSet) -> DiscreteSet:
    edges = [0]
    for a, b in dset.intervals:
        edges.extend([a, b])
    edges.append(grid.n)
    comp = [(edges[i], edges[i + 1]) for i in range(0, len(edges), 2)]
    return make_set(grid, comp)


def indicator(grid: WeightedGrid, dset: DiscreteSet) -> np.ndarray:
    out = np.zeros(grid.n)
    for a, b in dset.intervals:
        out[a:b] = 1.0
    return out


def measure_and_perimeter(grid: WeightedGrid, dset: DiscreteSet):
    """Recompute (measure, perimeter) of a set on this grid.

    The empty set gives (0, 0); grid ends contribute no perimeter.
    """
    fresh = make_set(grid, dset.intervals)
    return fresh.measure, fresh.perimeter


def total_variation(grid: WeightedGrid, values) -> float:
    """TV(f) = sum over interfaces of w * |jump|."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("total_variation needs finite values")
    return float(np.sum(grid.iface_weights * np.abs(np.diff(values))))


def interface_gradients(grid: WeightedGrid, values) -> np.ndarray:
    """Difference quotients (f_{i+1} - f_i)/dx_i at the interfaces."""
    values = np.asarray(values, dtype=float)
    return np.diff(values) / grid.dx


def lp_norm(grid: WeightedGrid, values, p: float) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.sum(grid.masses * np.abs(values) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class LevelSlice:
    threshold: float
    perimeter: float
    measure: float


def coarea_decompose(grid: WeightedGrid, values) -> list:
    """Superlevel-set decomposition of f at its distinct values.

    Returns one LevelSlice per threshold, the thresholds being the sorted
    distinct values of f with the maximum dropped (its superlevel set is
    empty): k distinct values yield k-1 slices.
    """
    values = np.asarray(values, dtype=float)
    distinct = np.unique(values)
    out = []
    w = grid.iface_weights
    masses = grid.masses
    for tval in distinct[:-1]:
        ind = values > tval
        per = float(np.sum(w[np.diff(ind.astype(np.int8)) != 0]))
        out.append(LevelSlice(float(tval), per, float(masses[ind].sum())))
    return out


def coarea_integral(grid: WeightedGrid, values) -> float:
    """Piecewise-constant integral of Per({f > t}) dt over the level range.

    Equals total_variation(grid, values) exactly by construction of the
    interface weights.
    """
    values = np.asarray(values, dtype=float)
    distinct = np.unique(values)
    if distinct.size < 2:
        return 0.0
    slices = coarea_decompose(grid, values)
    deltas = np.diff(distinct)
    return float(sum(s.perimeter * d for s, d in zip(slices, deltas)))


# ---------------------------------------------------------------------------
# Cheeger constant by exhaustive interval enumeration


@dataclass(frozen=True)
class CheegerResult:
    h: float
    optimizer: DiscreteSet
    profile: tuple  # ((measure, min perimeter), ...) per nonempty bin


def _two_interval_scan(grid, prefix, cutw, total, infinite):
    n = grid.n
    if n > 120:
        raise ValueError("two-interval cross-check is O(n^4); use n <= 120")
    best = (math.inf, math.inf, -1, -1, -1, -1)
    lo_i = 1 if infinite else 0
    hi_l = n - 1 if infinite else n
    for i in range(lo_i, n - 2):
        for j in range(i + 1, n - 1):
            m1 = prefix[j] - prefix[i]
            p1 = cutw[i] + cutw[j]
            for k in range(j + 1, n):
                ls = np.arange(k + 1, hi_l + 1)
                if not ls.size:
                    continue
                m = m1 + prefix[ls] - prefix[k]
                per = p1 + cutw[k] + cutw[ls]
                if infinite:
                    meas = m
                    ok = meas > 0
                else:
                    meas = np.minimum(m, total - m)
                    ok = meas > 0
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(ok, per / meas, math.inf)
                q = int(np.argmin(ratio))
                cand = (float(ratio[q]), float(meas[q]), i, j, k, int(ls[q]))
                if cand < best:
                    best = cand
    return best


def cheeger_search(
    grid: WeightedGrid,
    two_interval: bool = False,
    profile_bins: int = 32,
    block: int = 128,
) -> CheegerResult:
    """Exhaustive search for the Cheeger constant over index intervals.

    Candidates are all single index intervals plus their complements in the
    finite-measure modes (candidate measure capped at half the total); in
    INFINITE_TRUNCATED mode only intervals not touching the truncation window
    (half-lines of the underlying space carry infinite measure and are
    inadmissible).  Ties are broken by smaller measure, then leftmost start.

    The profile records, per candidate-measure bin (log-spaced), the minimal
    perimeter seen.  ``two_interval=True`` additionally scans unions of two
    intervals (small grids only) and returns the better optimizer.
    """
    n = grid.n
    if n < 2:
        raise ValueError("cheeger_search needs at least two nodes")
    prefix = grid.prefix_masses()
    cutw = grid.cut_weights()
    total = prefix[-1]
    infinite = grid.measure_mode is MeasureMode.INFINITE_TRUNCATED

    cap = total if infinite else 0.5 * total
    m_min = float(np.min(grid.masses))
    edges = np.geomspace(0.5 * m_min, cap, profile_bins + 1)
    bin_min = np.full(profile_bins, math.inf)

    best = (math.inf, math.inf, -1, -1)  # ratio, candidate measure, i, j
    js_all = np.arange(1, n + 1)
    j_ok_inf = js_all <= n - 1
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        iv = np.arange(i0, i1)
        m = prefix[js_all][None, :] - prefix[iv][:, None]
        per = cutw[js_all][None, :] + cutw[iv][:, None]
        valid = js_all[None, :] > iv[:, None]
        if infinite:
            meas = m
            valid = valid & (iv[:, None] >= 1) & j_ok_inf[None, :]
        else:
            meas = np.minimum(m, total - m)
        valid = valid & (meas > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(valid, per / meas, math.inf)

        flat = int(np.argmin(ratio))
        r = float(ratio.flat[flat])
        if r < math.inf:
            # resolve exact ties inside the block deterministically
            ties = np.argwhere(ratio == r)
            tie_meas = meas[ties[:, 0], ties[:, 1]]
            order = np.lexsort((ties[:, 1], ties[:, 0], tie_meas))
            bi, bj = ties[order[0]]
            cand = (r, float(meas[bi, bj]), int(iv[bi]), int(js_all[bj]))
            if cand < best:
                best = cand

        if profile_bins:
            sel = valid
            which = np.clip(
                np.searchsorted(edges, meas[sel], side="right") - 1,
                0,
                profile_bins - 1,
            )
            np.minimum.at(bin_min, which, per[sel])

    if best[2] < 0:
        raise ValueError("no admissible Cheeger candidate (degenerate grid)")

    h, meas_c, i, j = best
    base = interval_set(grid, i, j)
    optimizer = base
    if not infinite and base.measure > 0.5 * total:
        optimizer = complement_set(grid, base)

    if two_interval:
        tbest = _two_interval_scan(grid, prefix, cutw, total, infinite)
        if tbest[0] < h:
            h = tbest[0]
            pieces = [(tbest[2], tbest[3]), (tbest[4], tbest[5])]
            cand = make_set(grid, pieces)
            optimizer = cand
            if not infinite and cand.measure > 0.5 * total:
                optimizer = complement_set(grid, cand)

    mids = np.sqrt(edges[:-1] * edges[1:])
    profile = tuple(
        (float(mids[k]), float(bin_min[k]))
        for k in range(profile_bins)
        if math.isfinite(bin_min[k])
    )
    return CheegerResult(float(h), optimizer, profile)
