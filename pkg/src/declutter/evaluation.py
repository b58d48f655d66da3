"""Hausdorff metrics, named guarantee checks, and the relaxed-bound calculator.

Each named bound compares a measured quantity against the value the theory
promises for certified inputs. Checks whose hypotheses are not met by the
supplied certificates come back marked not-applicable instead of pass/fail,
so uncertified data never manufactures false failures. The stored lhs/rhs
always satisfy: pass iff lhs <= rhs + 1e-9.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certify import SamplingCertificate
from .decluttering import DeclutterResult
from .geometry import (
    GeometryError,
    GroundTruthRef,
    Metric,
    PointCloud,
    cross_distances,
    min_cross_distances,
    nearest_cross,
)
from .neighbors import build_index
from .parfree import THEORETICAL_C, ParfreeTrace

BOUND_TOLERANCE = 1e-9

# conservation factor of the iterative loop: any intermediate survivor stays
# within this multiple of its own robust distance from the final output
KAPPA_CONSERVE = (18.0 + 17.0 * math.sqrt(2.0)) / 4.0

# end-to-end factor of the parameter-free guarantee
PARFREE_FACTOR = 87.0 + 16.0 * math.sqrt(2.0)

BOUND_NAMES = ("thm3.3", "lem3.1", "lem3.2", "prop3.4", "thm3.7", "lem4.2",
               "lem4.4", "thm4.1", "lem4.5", "thmD.2")


@dataclass
class BoundCertificate:
    bound_name: str
    lhs: float
    rhs: float
    passed: bool | None        # None iff not applicable
    applicable: bool
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bound_name": self.bound_name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "passed": self.passed,
            "applicable": self.applicable,
            "inputs": self.inputs,
        }


def _finish(name: str, lhs: float, rhs: float, inputs: dict) -> BoundCertificate:
    return BoundCertificate(bound_name=name, lhs=float(lhs), rhs=float(rhs),
                            passed=bool(lhs <= rhs + BOUND_TOLERANCE),
                            applicable=True, inputs=inputs)


def _not_applicable(name: str, reason: str, inputs: dict) -> BoundCertificate:
    inputs = dict(inputs)
    inputs["reason"] = reason
    return BoundCertificate(bound_name=name, lhs=float("nan"), rhs=float("nan"),
                            passed=None, applicable=False, inputs=inputs)


# ---------------------------------------------------------------------------
# Hausdorff distances
# ---------------------------------------------------------------------------

def directed_hausdorff(a, b, metric: Metric | None = None,
                       threads: int = 1) -> float:
    """max over a of the distance to the nearest point of b."""
    metric = metric or Metric()
    a = np.atleast_2d(np.asarray(a)) if metric.kind != "precomputed" else np.atleast_1d(a)
    b = np.atleast_2d(np.asarray(b)) if metric.kind != "precomputed" else np.atleast_1d(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise GeometryError("Hausdorff distance needs non-empty sets")
    return float(min_cross_distances(metric, a, b, threads=threads).max())


def hausdorff(a, b, metric: Metric | None = None, threads: int = 1) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    return max(directed_hausdorff(a, b, metric, threads),
               directed_hausdorff(b, a, metric, threads))


def adaptive_hausdorff(points, kref: GroundTruthRef,
                       metric: Metric | None = None, threads: int = 1) -> float:
    """Hausdorff distance with both directions rescaled by the feature size
    (at the nearest reference point for the output direction)."""
    metric = metric or Metric()
    if not kref.has_feature_sizes:
        raise GeometryError("adaptive Hausdorff needs feature sizes")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 0:
        raise GeometryError("adaptive Hausdorff needs a non-empty set")
    f = kref.feature_sizes
    d_to_ref, nearest = nearest_cross(metric, pts, kref.points, threads=threads)
    term1 = float((d_to_ref / f[nearest]).max())
    d_from_ref = min_cross_distances(metric, kref.points, pts, threads=threads)
    term2 = float((d_from_ref / f).max())
    return max(term1, term2)


# ---------------------------------------------------------------------------
# relaxed-metric bound calculator
# ---------------------------------------------------------------------------

def relaxed_bound(c_x: float, c_lip: float) -> float:
    """Output-quality factor m for a metric with triangle relaxation c_x and
    a robust distance with Lipschitz relaxation c_lip; at (1, 1) this
    degenerates to the exact-metric factor 7."""
    if not (c_x >= 1 and c_lip >= 1):
        raise GeometryError("relaxation constants must be >= 1")
    if c_x >= 2:
        raise GeometryError("bound undefined for triangle relaxation >= 2")
    first = c_lip + c_x * c_lip + 4 * c_x * c_lip ** 2 + 1
    second = (2 + c_x ** 2 + 4 * c_x ** 2 * c_lip) / (2 - c_x)
    return float(max(first, second))


# ---------------------------------------------------------------------------
# named guarantee checks
# ---------------------------------------------------------------------------

def _declutter_gate(name, result: DeclutterResult, metric: Metric,
                    certificate: SamplingCertificate, inputs: dict,
                    need_uniform: bool = False, need_adaptive: bool = False):
    """Shared hypothesis checks for the single-pass bounds; returns a
    not-applicable certificate or None when all hypotheses hold."""
    if metric.relaxation != 1.0 or not metric.is_exact:
        return _not_applicable(name, "requires an exact metric", inputs)
    if result.vicinity_factor != 2.0:
        return _not_applicable(name, "asserted only at vicinity factor 2", inputs)
    if certificate.kind.name != result.profile.kind.name or certificate.k != result.profile.k:
        return _not_applicable(name, "certificate does not match the run", inputs)
    if certificate.weak_uniform:
        return _not_applicable(name, "needs the full noisy-sample conditions", inputs)
    if need_adaptive != certificate.adaptive:
        kind = "an adaptive" if need_adaptive else "a non-adaptive"
        return _not_applicable(name, f"needs {kind} certificate", inputs)
    if need_uniform and certificate.uniformity_c is None:
        return _not_applicable(name, "uniformity constant absent", inputs)
    return None


def _kept_points(cloud: PointCloud, result: DeclutterResult):
    ids = result.kept_ids
    return cloud.coords[ids] if cloud.is_coordinate else ids


def verify_bound(bound_name: str, *, cloud: PointCloud | None = None,
                 metric: Metric | None = None,
                 kref: GroundTruthRef | None = None,
                 certificate: SamplingCertificate | None = None,
                 result: DeclutterResult | None = None,
                 resampled_ids=None,
                 trace: ParfreeTrace | None = None,
                 certificates: dict[int, SamplingCertificate] | None = None,
                 i0: int | None = None,
                 C: float | None = None,
                 k: int | None = None,
                 c_x: float | None = None,
                 c_lip: float | None = None,
                 sample_limit: int = 512,
                 seed: int = 0,
                 threads: int = 1) -> BoundCertificate:
    """Evaluate one named guarantee; see BOUND_NAMES for the vocabulary."""
    metric = metric or Metric()
    if bound_name not in BOUND_NAMES:
        raise GeometryError(f"unknown bound name: {bound_name!r}")

    if bound_name in ("thm3.3", "lem3.1", "lem3.2", "prop3.4", "thm3.7"):
        if cloud is None or result is None or certificate is None or kref is None:
            raise GeometryError(f"{bound_name} needs cloud, result, certificate, reference")
        eps = certificate.epsilon_k
        inputs = {"k": certificate.k, "kind": certificate.kind.name,
                  "epsilon_k": eps, "n": cloud.n, "n_kept": int(result.kept.size)}
        gate = _declutter_gate(bound_name, result, metric, certificate, inputs,
                               need_uniform=(bound_name == "prop3.4"),
                               need_adaptive=(bound_name == "thm3.7"))
        if gate is not None:
            return gate
        kept = _kept_points(cloud, result)
        if bound_name == "thm3.3":
            lhs = hausdorff(kept, kref.points, metric, threads)
            return _finish(bound_name, lhs, 7.0 * eps, inputs)
        if bound_name == "lem3.1":
            lhs = directed_hausdorff(kref.points, kept, metric, threads)
            return _finish(bound_name, lhs, 5.0 * eps, inputs)
        if bound_name == "lem3.2":
            lhs = directed_hausdorff(kept, kref.points, metric, threads)
            return _finish(bound_name, lhs, 7.0 * eps, inputs)
        if bound_name == "thm3.7":
            lhs = adaptive_hausdorff(kept, kref, metric, threads)
            return _finish(bound_name, lhs, 7.0 * eps, inputs)
        # prop3.4 is a lower bound: lhs is the required separation and rhs the
        # measured minimum pairwise distance of the kept set
        c = certificate.uniformity_c
        inputs["uniformity_c"] = c
        if result.kept.size < 2:
            return _not_applicable(bound_name, "fewer than two kept points", inputs)
        block = cross_distances(metric, kept, kept)
        block[np.diag_indices_from(block)] = np.inf
        rhs = float(block.min())
        inputs["min_pairwise_kept"] = rhs
        return _finish(bound_name, 2.0 * eps / c, rhs, inputs)

    if bound_name == "lem4.2":
        if cloud is None or k is None:
            raise GeometryError("lem4.2 needs cloud and k")
        inputs = {"k": int(k), "n": cloud.n, "sample_limit": sample_limit}
        index = build_index(cloud, metric)
        rng = np.random.default_rng(seed)
        m = min(cloud.n, sample_limit)
        pick = rng.choice(cloud.n, size=m, replace=False)
        queries = cloud.coords[pick] if cloud.is_coordinate else pick
        rows = index.knn_distance_rows(queries, int(k))
        kk = float(k)
        factors = np.sqrt(kk / (kk - np.arange(1, k + 1) + 1.0))
        rms = np.sqrt(np.cumsum(rows * rows, axis=1)[:, -1] / kk)
        lhs = float((rows - factors[None, :] * rms[:, None]).max())
        return _finish(bound_name, lhs, 0.0, inputs)

    if bound_name == "lem4.4":
        if (cloud is None or result is None or certificate is None
                or kref is None or resampled_ids is None or C is None):
            raise GeometryError(
                "lem4.4 needs cloud, result, certificate, reference, resampled ids, C")
        eps = certificate.epsilon_k
        inputs = {"k": certificate.k, "epsilon_k": eps, "C": float(C),
                  "n": cloud.n, "n_resampled": int(np.asarray(resampled_ids).size)}
        gate = _declutter_gate(bound_name, result, metric, certificate, inputs,
                               need_uniform=True)
        if gate is not None:
            return gate
        if certificate.uniformity_c > 2.0 + BOUND_TOLERANCE:
            return _not_applicable(bound_name, "needs uniformity constant <= 2", inputs)
        ids = np.asarray(resampled_ids, dtype=np.intp)
        pts = cloud.coords[ids] if cloud.is_coordinate else ids
        lhs = hausdorff(pts, kref.points, metric, threads)
        return _finish(bound_name, lhs, (8.0 * C + 7.0) * eps, inputs)

    if bound_name == "thm4.1":
        if (trace is None or kref is None or certificates is None or i0 is None):
            raise GeometryError("thm4.1 needs trace, reference, certificates, i0")
        inputs = {"i0": int(i0), "C": trace.resampling_constant}
        if trace.degenerate or not trace.iterations:
            return _not_applicable(bound_name, "degenerate run", inputs)
        if abs(trace.resampling_constant - THEORETICAL_C) > 1e-12:
            return _not_applicable(bound_name,
                                   "asserted only at the theoretical resampling constant",
                                   inputs)
        if trace.clamped:
            return _not_applicable(bound_name, "k was clamped during the run", inputs)
        i_star = trace.iterations[0].i
        if not (1 <= i0 <= i_star):
            return _not_applicable(bound_name, "i0 outside the executed scales", inputs)
        cert0 = certificates.get(2 ** i0)
        if cert0 is None or cert0.weak_uniform or cert0.uniformity_c is None:
            return _not_applicable(bound_name, "missing full certificate at scale i0", inputs)
        if cert0.uniformity_c > 2.0 + BOUND_TOLERANCE:
            return _not_applicable(bound_name, "not uniform with c <= 2 at i0", inputs)
        if cert0.kind.name != trace.kind.name:
            return _not_applicable(bound_name, "certificate kind mismatch", inputs)
        for i in range(i0 + 1, i_star + 1):
            cert = certificates.get(2 ** i)
            if cert is None or cert.uniformity_c is None:
                return _not_applicable(bound_name,
                                       f"missing weak certificate at scale {i}", inputs)
            if cert.uniformity_c > 2.0 + BOUND_TOLERANCE:
                return _not_applicable(bound_name,
                                       f"not weak-uniform with c <= 2 at scale {i}", inputs)
        if cloud is None:
            raise GeometryError("thm4.1 needs the input cloud")
        final_ids = trace.iterations[-1].resampled_ids
        pts = cloud.coords[final_ids] if cloud.is_coordinate else final_ids
        eps0 = cert0.epsilon_k
        inputs.update({"epsilon_i0": eps0, "n_final": int(final_ids.size)})
        lhs = hausdorff(pts, kref.points, metric, threads)
        return _finish(bound_name, lhs, PARFREE_FACTOR * eps0, inputs)

    if bound_name == "lem4.5":
        if trace is None or cloud is None:
            raise GeometryError("lem4.5 needs trace and cloud")
        inputs = {"C": trace.resampling_constant, "kappa": KAPPA_CONSERVE}
        if trace.degenerate or not trace.iterations:
            return _not_applicable(bound_name, "degenerate run", inputs)
        if abs(trace.resampling_constant - THEORETICAL_C) > 1e-12:
            return _not_applicable(bound_name,
                                   "asserted only at the theoretical resampling constant",
                                   inputs)
        if trace.clamped:
            return _not_applicable(bound_name, "k was clamped during the run", inputs)
        final_ids = trace.iterations[-1].resampled_ids
        final_pts = cloud.coords[final_ids] if cloud.is_coordinate else final_ids
        rng = np.random.default_rng(seed)
        lhs = -math.inf
        for it in trace.iterations:
            ids = it.input_ids
            vals = it.profile_values
            if ids.size > sample_limit:
                pick = rng.choice(ids.size, size=sample_limit, replace=False)
            else:
                pick = np.arange(ids.size)
            sub = ids[pick]
            pts = cloud.coords[sub] if cloud.is_coordinate else sub
            d = min_cross_distances(metric, pts, final_pts, threads=threads)
            lhs = max(lhs, float((d - KAPPA_CONSERVE * vals[pick]).max()))
        return _finish(bound_name, lhs, 0.0, inputs)

    # thmD.2: relaxed-metric variant of the single-pass guarantee
    if cloud is None or result is None or certificate is None or kref is None:
        raise GeometryError("thmD.2 needs cloud, result, certificate, reference")
    cx = metric.relaxation if c_x is None else float(c_x)
    clip = result.profile.kind.c_lip if c_lip is None else float(c_lip)
    eps = certificate.epsilon_k
    inputs = {"c_x": cx, "c_lip": clip, "epsilon_k": eps, "k": certificate.k}
    if result.vicinity_factor != 2.0:
        return _not_applicable(bound_name, "asserted only at vicinity factor 2", inputs)
    if certificate.weak_uniform or certificate.adaptive:
        return _not_applicable(bound_name, "needs the plain noisy-sample certificate", inputs)
    if cx >= 2:
        return _not_applicable(bound_name, "bound undefined for triangle relaxation >= 2",
                               inputs)
    m = relaxed_bound(cx, clip)
    inputs["m"] = m
    kept = _kept_points(cloud, result)
    lhs = hausdorff(kept, kref.points, metric, threads)
    return _finish(bound_name, lhs, m * eps, inputs)
