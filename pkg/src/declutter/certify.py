"""Certification of sampling conditions against a ground-truth reference.

Given a cloud P and a dense finite reference K', these routines compute the
smallest scale value epsilon_k making the noisy-sample conditions hold over
the evaluated sets (K' for the density condition, P for the sparsity-of-noise
condition), the smallest uniformity constant c, and the adaptive variants
weighted by a feature-size function. Certificates gate the named bound
checks in :mod:`declutter.evaluation`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GeometryError,
    GroundTruthRef,
    Metric,
    PointCloud,
    min_cross_distances,
    nearest_cross,
    row_chunks,
    cross_distances,
)
from .neighbors import AUTO, build_index
from .robust import DistanceKind, RMS_K, values_at, values_at_scales


@dataclass
class SamplingCertificate:
    """Evaluated sampling-condition parameters for one (P, K', k, kind)."""

    k: int
    kind: DistanceKind
    epsilon_k: float
    uniformity_c: float | None
    weak_uniform: bool
    adaptive: bool
    conditions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "k": int(self.k),
            "kind": self.kind.name,
            "epsilon_k": float(self.epsilon_k),
            "uniformity_c": None if self.uniformity_c is None else float(self.uniformity_c),
            "weak_uniform": bool(self.weak_uniform),
            "adaptive": bool(self.adaptive),
            "conditions": {key: (float(v) if isinstance(v, (int, float, np.floating))
                                 else v)
                           for key, v in self.conditions.items()},
        }

    @staticmethod
    def from_dict(data: dict) -> "SamplingCertificate":
        from .robust import parse_kind
        return SamplingCertificate(
            k=int(data["k"]),
            kind=parse_kind(data["kind"]),
            epsilon_k=float(data["epsilon_k"]),
            uniformity_c=(None if data.get("uniformity_c") is None
                          else float(data["uniformity_c"])),
            weak_uniform=bool(data.get("weak_uniform", False)),
            adaptive=bool(data.get("adaptive", False)),
            conditions=dict(data.get("conditions", {})),
        )


def _require_coordinate(cloud: PointCloud, kref: GroundTruthRef) -> None:
    if not cloud.is_coordinate or not kref.cloud.is_coordinate:
        raise GeometryError(
            "reference comparisons need coordinate-backed clouds on both sides")


def estimate_epsilon_k(cloud: PointCloud, metric: Metric, kref: GroundTruthRef,
                       k: int, kind: DistanceKind = RMS_K,
                       threads: int = 1) -> float:
    """Smallest epsilon such that both noisy-sample conditions hold over the
    evaluated sets: every reference point is densely covered (robust distance
    at most epsilon) and every cloud point within distance at most its robust
    distance plus epsilon of the reference."""
    _require_coordinate(cloud, kref)
    if kref.cloud.n < 1:
        raise GeometryError("empty reference")
    index = build_index(cloud, metric, AUTO)
    cond1 = float(values_at(index, kref.points, k, kind, threads=threads).max())
    dist_to_ref = min_cross_distances(metric, cloud.coords, kref.points,
                                      threads=threads)
    own = values_at(index, cloud.coords, k, kind, threads=threads)
    cond2 = float((dist_to_ref - own).max())
    return max(cond1, cond2, 0.0)


def estimate_uniformity(cloud: PointCloud, metric: Metric, epsilon_k: float,
                        k: int, kind: DistanceKind = RMS_K,
                        threads: int = 1) -> float | None:
    """Smallest valid uniformity constant epsilon_k / min_p d_k(p), or None
    when some point has robust distance zero (uniformity undefined)."""
    if not (epsilon_k > 0):
        raise GeometryError("uniformity needs epsilon_k > 0")
    index = build_index(cloud, metric, AUTO)
    queries = cloud.coords if cloud.is_coordinate else cloud.ids()
    own = values_at(index, queries, k, kind, threads=threads)
    lo = float(own.min())
    if lo <= 0.0:
        return None
    return float(epsilon_k) / lo


def estimate_adaptive_epsilon(cloud: PointCloud, metric: Metric,
                              kref: GroundTruthRef, k: int,
                              kind: DistanceKind = RMS_K,
                              threads: int = 1) -> float:
    """Adaptive variant: both conditions rescaled by the feature size at the
    relevant reference point (the nearest one; ties resolved to lowest id)."""
    _require_coordinate(cloud, kref)
    if not kref.has_feature_sizes:
        raise GeometryError("adaptive certification needs feature sizes on the reference")
    f = kref.feature_sizes
    index = build_index(cloud, metric, AUTO)
    cond1 = float((values_at(index, kref.points, k, kind, threads=threads) / f).max())
    dist_to_ref, nearest = nearest_cross(metric, cloud.coords, kref.points,
                                         threads=threads)
    own = values_at(index, cloud.coords, k, kind, threads=threads)
    cond2 = float(((dist_to_ref - own) / f[nearest]).max())
    return max(cond1, cond2, 0.0)


def certify(cloud: PointCloud, metric: Metric, kref: GroundTruthRef, k: int,
            kind: DistanceKind = RMS_K, weak: bool = False,
            adaptive: bool = False, threads: int = 1) -> SamplingCertificate:
    """Full certificate: epsilon (weak variants skip the sparsity-of-noise
    condition), the uniformity constant, and the per-condition values."""
    _require_coordinate(cloud, kref)
    index = build_index(cloud, metric, AUTO)
    conditions: dict = {}
    if adaptive:
        if not kref.has_feature_sizes:
            raise GeometryError("adaptive certification needs feature sizes")
        f = kref.feature_sizes
        cond1 = float((values_at(index, kref.points, k, kind, threads=threads) / f).max())
        dist_to_ref, nearest = nearest_cross(metric, cloud.coords, kref.points,
                                             threads=threads)
        own = values_at(index, cloud.coords, k, kind, threads=threads)
        cond2 = float(((dist_to_ref - own) / f[nearest]).max())
        tie_count = _nearest_tie_count(metric, cloud, kref, dist_to_ref)
        conditions["nearest_reference_ties"] = int(tie_count)
    else:
        cond1 = float(values_at(index, kref.points, k, kind, threads=threads).max())
        dist_to_ref = min_cross_distances(metric, cloud.coords, kref.points,
                                          threads=threads)
        own = values_at(index, cloud.coords, k, kind, threads=threads)
        cond2 = float((dist_to_ref - own).max())
    epsilon = max(cond1, 0.0) if weak else max(cond1, cond2, 0.0)
    lo = float(own.min())
    uniformity = (float(epsilon) / lo) if (epsilon > 0 and lo > 0) else None
    conditions.update({
        "cond1_max": cond1,
        "cond2_max": cond2,
        "min_robust_distance": lo,
    })
    return SamplingCertificate(k=int(k), kind=kind, epsilon_k=float(epsilon),
                               uniformity_c=uniformity, weak_uniform=bool(weak),
                               adaptive=bool(adaptive), conditions=conditions)


def certify_scales(cloud: PointCloud, metric: Metric, kref: GroundTruthRef,
                   ks, kind: DistanceKind = RMS_K, weak: bool = False,
                   threads: int = 1) -> dict[int, SamplingCertificate]:
    """Certificates for several k values in one sweep (shared distance work)."""
    _require_coordinate(cloud, kref)
    ks = sorted({int(k) for k in ks})
    index = build_index(cloud, metric, AUTO)
    ref_vals = values_at_scales(index, kref.points, ks, kind, threads=threads)
    own_vals = values_at_scales(index, cloud.coords, ks, kind, threads=threads)
    dist_to_ref = min_cross_distances(metric, cloud.coords, kref.points,
                                      threads=threads)
    out: dict[int, SamplingCertificate] = {}
    for k in ks:
        cond1 = float(ref_vals[k].max())
        cond2 = float((dist_to_ref - own_vals[k]).max())
        epsilon = max(cond1, 0.0) if weak else max(cond1, cond2, 0.0)
        lo = float(own_vals[k].min())
        uniformity = (float(epsilon) / lo) if (epsilon > 0 and lo > 0) else None
        out[k] = SamplingCertificate(
            k=k, kind=kind, epsilon_k=float(epsilon), uniformity_c=uniformity,
            weak_uniform=bool(weak), adaptive=False,
            conditions={"cond1_max": cond1, "cond2_max": cond2,
                        "min_robust_distance": lo})
    return out


def _nearest_tie_count(metric: Metric, cloud: PointCloud, kref: GroundTruthRef,
                       dist_to_ref: np.ndarray) -> int:
    """How many cloud points have more than one nearest reference point."""
    ties = 0
    pts = cloud.coords
    ref = kref.points
    for sl in row_chunks(pts.shape[0], ref.shape[0]):
        block = cross_distances(metric, pts[sl], ref)
        ties += int(((block == dist_to_ref[sl, None]).sum(axis=1) > 1).sum())
    return ties


@dataclass
class FeatureSizeReport:
    positive_ok: bool
    min_value: float
    lipschitz_ok: bool
    worst_excess: float
    worst_pair: tuple[int, int] | None
    pairs_checked: int
    sampled: bool

    @property
    def ok(self) -> bool:
        return self.positive_ok and self.lipschitz_ok


def check_feature_size(kref: GroundTruthRef, metric: Metric,
                       tolerance: float = 1e-9, max_exhaustive: int = 3000,
                       sample_pairs: int = 2_000_000,
                       seed: int = 0) -> FeatureSizeReport:
    """Verify positivity and the 1-Lipschitz property of the feature sizes,
    pairwise over the reference (sampled above a size threshold)."""
    if not kref.has_feature_sizes:
        raise GeometryError("no feature sizes to check")
    f = kref.feature_sizes
    pts = kref.points
    n = pts.shape[0]
    positive_ok = bool(np.all(f > 0))
    min_value = float(f.min())
    worst_excess = -np.inf
    worst_pair = None
    sampled = n > max_exhaustive
    if sampled:
        from .geometry import row_distances
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, size=sample_pairs)
        jj = rng.integers(0, n, size=sample_pairs)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
        pairs_checked = int(ii.size)
        d = row_distances(metric, pts[ii], pts[jj])
        excess = np.abs(f[ii] - f[jj]) - d
        arg = int(excess.argmax())
        worst_excess = float(excess[arg])
        worst_pair = (int(ii[arg]), int(jj[arg]))
    else:
        pairs_checked = n * (n - 1) // 2
        for sl in row_chunks(n, n):
            block = cross_distances(metric, pts[sl], pts)
            excess = np.abs(f[sl, None] - f[None, :]) - block
            rows = np.arange(sl.start, sl.stop)
            excess[np.arange(rows.size), rows] = -np.inf  # ignore self pairs
            arg = np.unravel_index(int(excess.argmax()), excess.shape)
            if excess[arg] > worst_excess:
                worst_excess = float(excess[arg])
                worst_pair = (int(rows[arg[0]]), int(arg[1]))
    lipschitz_ok = worst_excess <= tolerance
    return FeatureSizeReport(positive_ok=positive_ok, min_value=min_value,
                             lipschitz_ok=bool(lipschitz_ok),
                             worst_excess=float(worst_excess),
                             worst_pair=worst_pair,
                             pairs_checked=pairs_checked, sampled=sampled)
