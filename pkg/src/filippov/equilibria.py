"""Pseudo-equilibria: zeros of the sliding field ``f^S`` or of ``f^T``."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, FilippovError
from .geometry import constraint_matrix, grad_H, project_sigma, project_T, tangent_basis
from .sliding import second_order_sliding_field, sliding_field
from .surface import RegionKind, SurfaceKind, classify_point

log = logging.getLogger(__name__)

STABILITY_TOL = 1e-8
DEDUPE_DIST = 1e-6


class Order(enum.Enum):
    FIRST = "First"
    SECOND = "Second"


class Admissibility(enum.Enum):
    ADMISSIBLE = "Admissible"
    VIRTUAL = "Virtual"


class Verdict(enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class PseudoEquilibrium:
    point: np.ndarray
    order: Order
    admissibility: Admissibility
    region: object
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    lam: float = math.nan
    verdict: Verdict = Verdict.INCONCLUSIVE
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "point": [float(v) for v in self.point],
            "order": self.order.value,
            "admissibility": self.admissibility.value,
            "region": self.region.value if self.region is not None else None,
            "eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
            "lambda": None if not math.isfinite(self.lam) else float(self.lam),
            "verdict": self.verdict.value,
        }


class _Restricted:
    """A sliding field in local coordinates of ``Sigma`` or ``T`` around ``x``."""

    def __init__(self, sys, order, basis=None):
        self.sys = sys
        self.order = Order(order)

    def project(self, x):
        if self.order is Order.FIRST:
            return project_sigma(self.sys, x)
        return project_T(self.sys, x)

    def field(self, x):
        if self.order is Order.FIRST:
            return sliding_field(self.sys, x)[0]
        return second_order_sliding_field(self.sys, x, check=False)[0]

    def basis(self, x):
        if self.order is Order.FIRST:
            return tangent_basis(grad_H(self.sys, x))
        return tangent_basis(constraint_matrix(self.sys, x))

    def reduced(self, x, Q, u):
        return Q.T @ self.field(self.project(x + Q @ u))

    def jacobian(self, x, Q):
        k = Q.shape[1]
        h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
        J = np.empty((k, k))
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            J[:, j] = (self.reduced(x, Q, e) - self.reduced(x, Q, -e)) / (2.0 * h)
        return J


def _newton(rf, x0, max_iter=60):
    x = rf.project(np.asarray(x0, dtype=float))
    for _ in range(max_iter):
        f = rf.field(x)
        if np.linalg.norm(f) <= 1e-13 * (1.0 + np.linalg.norm(x)):
            return x
        Q = rf.basis(x)
        J = rf.jacobian(x, Q)
        du = np.linalg.solve(J, -(Q.T @ f))
        x = rf.project(x + Q @ du)
        if not np.all(np.isfinite(x)):
            break
        if np.linalg.norm(du) <= 1e-15 * (1.0 + np.linalg.norm(x)):
            return x
    if np.all(np.isfinite(x)) and np.linalg.norm(rf.field(x)) <= 1e-10:
        return x
    raise FilippovError("Newton iteration did not converge")


def restricted_jacobian(sys, x, order, basis=None):
    """Jacobian of the restricted sliding field at ``x`` in an orthonormal chart."""
    rf = _Restricted(sys, order)
    Q = rf.basis(x) if basis is None else basis
    return rf.jacobian(np.asarray(x, dtype=float), Q)


def classify_stability(sys, pe, tol=STABILITY_TOL):
    """Stability verdict for a pseudo-equilibrium from its region and spectrum."""
    re = np.real(pe.eigenvalues)
    any_pos = bool(np.any(re > tol))
    all_neg = bool(re.size == 0 or np.all(re < -tol))
    if pe.order is Order.FIRST:
        if pe.region is SurfaceKind.REPELLING_SLIDING or any_pos:
            return Verdict.UNSTABLE
        if pe.region is SurfaceKind.ATTRACTING_SLIDING and all_neg:
            return Verdict.ASYMPTOTICALLY_STABLE
        return Verdict.INCONCLUSIVE
    lam = pe.lam
    if pe.region is RegionKind.VISVIS or (pe.region is RegionKind.INVINV and lam > tol) or any_pos:
        return Verdict.UNSTABLE
    if pe.region is RegionKind.INVINV and lam < -tol and all_neg:
        return Verdict.ASYMPTOTICALLY_STABLE
    return Verdict.INCONCLUSIVE


def _build(sys, x, order):
    rf = _Restricted(sys, order)
    c = classify_point(sys, x)
    Q = rf.basis(x)
    J = rf.jacobian(x, Q)
    eig = np.linalg.eigvals(J) if J.size else np.empty(0, dtype=complex)
    if order is Order.FIRST:
        region = c.kind
        adm = Admissibility.ADMISSIBLE if region in (SurfaceKind.ATTRACTING_SLIDING,
                                                     SurfaceKind.REPELLING_SLIDING) else Admissibility.VIRTUAL
        lam = math.nan
    else:
        region = c.region
        adm = Admissibility.ADMISSIBLE if region in (RegionKind.VISVIS, RegionKind.INVINV) else Admissibility.VIRTUAL
        lam = c.lam if region is RegionKind.INVINV else math.nan
    pe = PseudoEquilibrium(x, order, adm, region, J, eig, lam)
    pe.verdict = classify_stability(sys, pe)
    return pe


def find_pseudo_equilibria(sys, seeds, order=Order.FIRST):
    """Newton's method on the restricted sliding field from each seed.

    Converged roots closer than ``1e-6`` are merged. Seeds whose iteration
    fails (divergence, degenerate denominators) are skipped and logged.

    Returns
    -------
    list of PseudoEquilibrium
    """
    order = Order(order)
    rf = _Restricted(sys, order)
    found = []
    for seed in seeds:
        try:
            x = _newton(rf, seed)
        except (FilippovError, DegeneracyError, np.linalg.LinAlgError, ArithmeticError) as exc:
            log.info("seed %s skipped: %s", np.asarray(seed).tolist(), exc)
            continue
        if any(np.linalg.norm(x - q.point) <= DEDUPE_DIST for q in found):
            continue
        try:
            found.append(_build(sys, x, order))
        except (FilippovError, ArithmeticError) as exc:
            log.info("root %s not classifiable: %s", x.tolist(), exc)
    found.sort(key=lambda q: tuple(q.point))
    return found
