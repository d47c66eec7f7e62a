"""Closed-form references for the verification benchmarks.

Terzaghi's one-dimensional consolidation series, the zero-viscosity
(toughness-dominated) plane-strain hydraulic fracture solution, the
propagation-regime classifier and the discretization correction of the
critical energy release rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import MaterialParams

TOUGHNESS_REGIME_THRESHOLD = 3.4e-3


@dataclass(frozen=True)
class TerzaghiCoeffs:
    """Consolidation coefficients; units follow their defining expressions."""

    a: float    # 1/Pa, inverse constrained modulus
    S: float    # 1/Pa, storage
    b: float    # 1/Pa
    d: float    # dimensionless undrained pressure fraction
    c: float    # m^2/s, consolidation coefficient
    c_m: float  # 1/Pa


def terzaghi_coeffs(params: MaterialParams, L: float) -> TerzaghiCoeffs:
    """Evaluate the six consolidation coefficients from material data.

    ``a = (1+nu)(1-2nu)/(E(1-nu))``, ``S = (alpha-phi)/K_s + phi c_f``,
    ``b = a/(1 + a alpha^2/S)``, ``d = (a-b)/(a alpha)``,
    ``c = k/((a alpha^2 + S) mu)``, ``c_m = (a-b)/d``.
    """
    if L <= 0.0:
        raise ValueError("column length must be positive")
    E, nu = params.E, params.nu
    alpha = params.alpha_m
    a = (1.0 + nu) * (1.0 - 2.0 * nu) / (E * (1.0 - nu))
    inv_Ks = 0.0 if math.isinf(params.K_s) else 1.0 / params.K_s
    S = (alpha - params.phi_m) * inv_Ks + params.phi_m * params.c_f
    denom = S + a * alpha * alpha
    if denom <= 0.0:
        raise ValueError("degenerate configuration: S + a alpha^2 = 0")
    b = a * S / denom           # a / (1 + a alpha^2 / S), well-defined at S = 0
    d = (a - b) / (a * alpha)
    c = params.perm_m / (denom * params.mu_f)
    c_m = (a - b) / d
    return TerzaghiCoeffs(a=a, S=S, b=b, d=d, c=c, c_m=c_m)


def _series_n_terms(t: float, L: float, c: float, n_terms: int | None) -> int:
    if n_terms is not None:
        return max(1, n_terms)
    # modes decay like exp(-(2m+1)^2 pi^2 c t / 4L^2); pick the count that
    # pushes the first dropped amplitude below 1e-12 (capped for t ~ 0)
    rate = math.pi * math.pi * c * max(t, 0.0) / (4.0 * L * L)
    if rate <= 0.0:
        return 20000
    m = math.sqrt(max(math.log(1e12) / rate, 1.0))
    return min(int(m / 2) + 10, 20000)


def terzaghi_pressure(x, t: float, sigma_x: float, L: float,
                      coeffs: TerzaghiCoeffs, n_terms: int | None = None):
    """Pore pressure p(x, t) of the consolidation series (drained at x=0)."""
    x = np.asarray(x, dtype=float)
    n = _series_n_terms(t, L, coeffs.c, n_terms)
    m = np.arange(n)
    k = (2 * m + 1)
    damp = np.exp(-(k * np.pi) ** 2 * coeffs.c * t / (4.0 * L * L))
    phase = np.sin(np.tensordot(x, k * np.pi / (2.0 * L), axes=0))
    series = phase @ (damp / k)
    return 4.0 * coeffs.d * sigma_x / np.pi * series


def terzaghi_displacement(x, t: float, sigma_x: float, L: float,
                          coeffs: TerzaghiCoeffs, n_terms: int | None = None):
    """Displacement u(x, t); zero at the fixed end x = L."""
    x = np.asarray(x, dtype=float)
    n = _series_n_terms(t, L, coeffs.c, n_terms)
    m = np.arange(n)
    k = (2 * m + 1)
    damp = np.exp(-(k * np.pi) ** 2 * coeffs.c * t / (4.0 * L * L))
    phase = np.cos(np.tensordot(x, k * np.pi / (2.0 * L), axes=0))
    series = phase @ (damp / (k * k))
    trans = (L - x) - 8.0 * L / np.pi**2 * series
    return coeffs.c_m * coeffs.d * sigma_x * trans + coeffs.b * sigma_x * (L - x)


# ---------------------------------------------------------------------------
# KGD fracture
# ---------------------------------------------------------------------------

def kgd_dimensionless_viscosity(params: MaterialParams, Q: float) -> tuple[float, str]:
    """Dimensionless viscosity M = (mu' Q / E')(E'/K')^4 and regime label.

    K' = sqrt(32 Gc E'/pi), mu' = 12 mu, E' = E/(1 - nu^2); the fracture is
    toughness dominated for M < 3.4e-3.
    """
    if Q < 0.0:
        raise ValueError("injection rate must be non-negative")
    E_p = params.E / (1.0 - params.nu**2)
    K_p = math.sqrt(32.0 * params.Gc * E_p / math.pi)
    mu_p = 12.0 * params.mu_f
    M = (mu_p * Q / E_p) * (E_p / K_p) ** 4
    label = "toughness" if M < TOUGHNESS_REGIME_THRESHOLD else "viscosity/transition"
    return M, label


def kgd_toughness_reference(t: float, params: MaterialParams, Q_total: float,
                            Gc: float | None = None) -> tuple[float, float, float]:
    """Zero-viscosity KGD solution: (half_length, inlet_width, net_pressure).

    A uniformly pressurized Griffith crack at K_I = K_Ic = sqrt(Gc E')
    with volume balance Q_total t = 2 pi p l^2 / E' gives

        l(t) = (E' Q_total t / (2 sqrt(pi) K_Ic))^(2/3),
        p(t) = K_Ic / sqrt(pi l),   w0 = 4 p l / E'.
    """
    if t <= 0.0:
        raise ValueError("time must be positive")
    E_p = params.E / (1.0 - params.nu**2)
    K_Ic = math.sqrt((params.Gc if Gc is None else Gc) * E_p)
    half_length = (E_p * Q_total * t / (2.0 * math.sqrt(math.pi) * K_Ic)) ** (2.0 / 3.0)
    pressure = K_Ic / math.sqrt(math.pi * half_length)
    width = 4.0 * pressure * half_length / E_p
    return half_length, width, pressure


def gc_effective(Gc: float, h_e: float, ell: float, c_n: float) -> float:
    """Discretization-corrected release rate Gc (1 + h_e / (4 c_n ell)).

    This is the rate the regularized functional effectively dissipates per
    unit crack length at mesh size h_e; comparisons against sharp-crack
    references use it in place of the configured Gc.
    """
    if min(Gc, h_e, ell, c_n) <= 0.0:
        raise ValueError("gc_effective requires positive arguments")
    return Gc * (1.0 + h_e / (4.0 * c_n * ell))
