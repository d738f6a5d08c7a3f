"""Hyperkahler specialisation: second heavenly equation, Hessian K-matrix, spin Yang matrix.

Only the flat background carries the scalar potential machinery.  The
residual of the heavenly equation is

    Theta_zzt + Theta_wwt + HEAVENLY_SIGN (Theta_zz Theta_ww - Theta_zw^2)

and the Hessian map sends Theta to the 2x2 matrix of its holomorphic second
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import conventions
from .fieldcore import Field, block, derive, max_norm
from .gauge import kmatrix_residual
from .geometry import curvature_diagnostics

HYPERKAHLER_TOL = 1e-8


class HeavenlyError(Exception):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class HeavenlyPotential:
    theta: Field
    background: str = "flat"

    def __post_init__(self):
        if self.background != "flat":
            raise HeavenlyError(f"background {self.background!r} not supported; only flat")
        if self.theta.rows != 1 or self.theta.cols != 1:
            raise HeavenlyError("Theta must be a scalar field")


def _theta(t):
    return t.theta if isinstance(t, HeavenlyPotential) else t


def second_heavenly_residual(theta):
    t = _theta(theta)
    dz, dw = derive(t, "z"), derive(t, "w")
    tzz, tzw, tww = derive(dz, "z"), derive(dz, "w"), derive(dw, "w")
    box = derive(dz, "zt") + derive(dw, "wt")
    return box + (tzz @ tww - tzw @ tzw).scale(conventions.HEAVENLY_SIGN)


def k_from_theta(theta):
    """K = [[Theta_zz, Theta_zw], [Theta_wz, Theta_ww]]."""
    t = _theta(theta)
    dz, dw = derive(t, "z"), derive(t, "w")
    return block([[derive(dz, "z"), derive(dz, "w")], [derive(dw, "z"), derive(dw, "w")]])


def chain_residuals(g, theta, margin=None):
    """Norms of the heavenly residual and of the K-matrix residual of its Hessian."""
    h = second_heavenly_residual(theta)
    k = kmatrix_residual(g, k_from_theta(theta), "flat")
    return {"heavenly": max_norm(h, margin), "kmatrix": max_norm(k, margin)}


def hyperkahler_report(g, diagnostics=None, margin=None):
    d = diagnostics or curvature_diagnostics(g)
    sm = d.summary(margin)
    ok = max(sm["ricci_traceless_max"], sm["scalar_max_abs"], sm["weyl_minus_max"]) <= HYPERKAHLER_TOL
    return {"ricci_traceless_max": sm["ricci_traceless_max"], "scalar_max_abs": sm["scalar_max_abs"],
            "weyl_minus_max": sm["weyl_minus_max"], "tol": HYPERKAHLER_TOL, "hyperkahler": ok}


def spin_yang_matrix(g, check=True, diagnostics=None, margin=None):
    """Yang matrix [[-g_zwt, g_zzt], [-g_wwt, g_wzt]] of a hyperkahler metric.

    Refuses (HeavenlyError with the diagnostics attached) when the metric is
    not Ricci-flat with vanishing W-.
    """
    if check:
        rep = hyperkahler_report(g, diagnostics, margin)
        if not rep["hyperkahler"]:
            raise HeavenlyError("metric is not hyperkahler; spin Yang matrix undefined", rep)
    G = g.g
    return block([[-G["zwt"], G["zzt"]], [-G["wwt"], G["wzt"]]])


__all__ = ["HeavenlyPotential", "HeavenlyError", "second_heavenly_residual", "k_from_theta",
           "chain_residuals", "spin_yang_matrix", "hyperkahler_report", "HYPERKAHLER_TOL"]
