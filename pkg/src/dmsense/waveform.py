"""Unit-energy Gaussian-pulse sensing waveforms and their correlation calculus.

Two subcarrier families are modeled, both shaped by a single Gaussian pulse of
width parameter T:

* ``ofdm``: complex exponential subcarrier, index n, frequency (n-1)/T.
* ``ocdm``: chirped subcarrier, index n out of M available chirps, quadratic
  phase pi*M/T^2 * (t - (n-1)T/M)^2.

Both reduce to the canonical form

    s(t) = amp * exp(quad * t^2 + lin * t + cst),   Re(quad) = -pi/T^2 < 0,

so every moment and delay-Doppler correlation integral needed by the Fisher
information assembly is a Gaussian integral with a polynomial factor and has
an exact closed form. An adaptive-quadrature path is kept alongside the
closed forms; the test suite gates both against finite differences.

Sign conventions for the cross-correlation

    Y(tau_q, tau_l, df) = int s(t - tau_q) s*(t - tau_l) e^{j 2 pi df t} dt,
    df = f_q - f_l,

and its partial derivatives follow the delayed-pulse convention: d_tau means
d/d tau_q, d_f means d/d f_q, and the mixed second partials pair one
derivative per target (q, l) except for the *_q2 fields which differentiate
the q-arguments twice (the additive-coupling set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

GAUSSIAN_OFDM = "ofdm"
GAUSSIAN_OCDM = "ocdm"

TWO_PI = 2.0 * math.pi

# quadrature window half-width in units of T; Gaussian tail < 1e-15 beyond 6T
_QUAD_WINDOW = 6.0
_QUAD_ABS_TOL = 1e-12


class WaveformError(ValueError):
    """Invalid waveform construction parameters."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_tol: float):
        super().__init__(f"{message} (achieved tolerance {achieved_tol:.3e})")
        self.achieved_tol = achieved_tol


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveformModel:
    """One transmitter's unit-energy complex baseband envelope.

    Callable: ``w(t)`` evaluates the envelope at time(s) t (seconds).
    """

    kind: str
    subcarrier: int          # n >= 1
    pulse_width: float       # T, seconds
    num_chirps: int | None   # M, ocdm only
    # canonical exponent s(t) = amp * exp(quad t^2 + lin t + cst)
    amp: float
    quad: complex
    lin: complex
    cst: complex

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amp * np.exp(self.quad * t * t + self.lin * t + self.cst)

    def derivative(self, t):
        """d s / d t, analytic."""
        t = np.asarray(t, dtype=float)
        return self(t) * (2.0 * self.quad * t + self.lin)


@dataclass(frozen=True)
class WaveformMoments:
    """Scalar moments of a unit-energy waveform.

    cross_term is the time-frequency cross moment at zero delay; at a link
    delay tau it shifts analytically to cross_term - j*2*pi*mean_freq*tau.
    """

    sebw: float          # squared effective bandwidth, Hz^2
    setw: float          # squared effective time width, s^2
    cross_term: complex  # sigma_tf at tau = 0
    mean_freq: float     # Hz
    mean_time: float     # s

    def cross_term_at(self, tau: float) -> complex:
        return self.cross_term - 1j * TWO_PI * self.mean_freq * tau

    def second_time_moment(self, tau: float) -> float:
        """int t^2 |s(t - tau)|^2 dt = setw + 2 tau mean_time + tau^2."""
        return self.setw + 2.0 * tau * self.mean_time + tau * tau


@dataclass(frozen=True)
class CrossCorr:
    """Delay-Doppler cross-correlation value and partial derivatives."""

    value: complex
    d_tau: complex      # d/d tau_q
    d_f: complex        # d/d f_q
    d2_tautau: complex  # d2/d tau_q d tau_l
    d2_ff: complex      # d2/d f_q d f_l
    d2_tauf: complex    # d2/d tau_q d f_l
    d2_tauq2: complex   # d2/d tau_q^2
    d2_fq2: complex     # d2/d f_q^2
    d2_taufq: complex   # d2/d tau_q d f_q


# ---------------------------------------------------------------------------
# Construction and moments
# ---------------------------------------------------------------------------

def make_waveform(kind: str, subcarrier: int = 1, pulse_width: float = 1e-3,
                  num_chirps: int | None = None) -> WaveformModel:
    """Build a unit-energy Gaussian-pulse subcarrier model.

    Raises WaveformError for nonpositive T, subcarrier < 1, or an ocdm
    subcarrier index exceeding the number of available chirps M.
    """
    if pulse_width <= 0:
        raise WaveformError(f"pulse_width must be positive, got {pulse_width}")
    if subcarrier < 1:
        raise WaveformError(f"subcarrier index must be >= 1, got {subcarrier}")
    t2 = pulse_width * pulse_width
    amp = (2.0 / t2) ** 0.25
    if kind == GAUSSIAN_OFDM:
        quad_c = complex(-math.pi / t2, 0.0)
        lin = 1j * TWO_PI * (subcarrier - 1) / pulse_width
        cst = 0.0 + 0.0j
        m = None
    elif kind == GAUSSIAN_OCDM:
        if num_chirps is None or num_chirps < 1:
            raise WaveformError("ocdm requires num_chirps M >= 1")
        if subcarrier > num_chirps:
            raise WaveformError(
                f"ocdm subcarrier {subcarrier} exceeds num_chirps {num_chirps}")
        m = int(num_chirps)
        t0 = (subcarrier - 1) * pulse_width / m
        quad_c = complex(-math.pi / t2, math.pi * m / t2)
        lin = -1j * TWO_PI * m * t0 / t2
        cst = 1j * math.pi * m * t0 * t0 / t2
        m = int(num_chirps)
    else:
        raise WaveformError(f"unknown waveform kind {kind!r}")
    return WaveformModel(kind=kind, subcarrier=int(subcarrier),
                         pulse_width=float(pulse_width), num_chirps=m,
                         amp=amp, quad=quad_c, lin=lin, cst=cst)


def moments(w: WaveformModel) -> WaveformMoments:
    """Closed-form moments for the Gaussian family.

    With envelope variance v_t = T^2/(4 pi) and s'(t)/s(t) = 2 quad t + lin:

        setw = v_t, mean_time = 0, mean_freq = Im(lin)/(2 pi),
        sebw = (4 |quad|^2 v_t + |lin|^2) / (4 pi^2),
        sigma_tf(0) = -2 quad v_t.
    """
    v_t = w.pulse_width ** 2 / (4.0 * math.pi)
    sebw = (4.0 * abs(w.quad) ** 2 * v_t + abs(w.lin) ** 2) / (4.0 * math.pi ** 2)
    mean_freq = w.lin.imag / TWO_PI
    cross = -2.0 * w.quad * v_t
    return WaveformMoments(sebw=float(sebw), setw=float(v_t), cross_term=cross,
                           mean_freq=float(mean_freq), mean_time=0.0)


# ---------------------------------------------------------------------------
# Gaussian integral engine
# ---------------------------------------------------------------------------

def _gauss_moments(mu: complex, var: complex, order: int) -> list[complex]:
    """Moments E[u^k] of exp(-a u^2 + b u) weight, mu = b/2a, var = 1/2a."""
    out = [1.0 + 0j, mu]
    for k in range(2, order + 1):
        out.append(mu * out[k - 1] + (k - 1) * var * out[k - 2])
    return out


def _poly_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.convolve(p, q)


def _corr_exponent(w: WaveformModel, tau_q: float, tau_l: float, df: float):
    """Centered exponent parameters for s(t-tau_q) s*(t-tau_l) e^{j2pi df t}.

    Returns (a, b, log_i0, tc, delta) with the substitution t = u + tc,
    tc = (tau_q + tau_l)/2, delta = (tau_q - tau_l)/2, so the integrand is
    amp^2 * exp(-a u^2 + b u + a0) and int exp = exp(log_i0).
    """
    tc = 0.5 * (tau_q + tau_l)
    delta = 0.5 * (tau_q - tau_l)
    a = -2.0 * w.quad.real  # > 0
    b = (-4j * delta * w.quad.imag + 2.0 * w.lin.real + 1j * TWO_PI * df)
    a0 = (2.0 * delta * delta * w.quad.real - 2j * delta * w.lin.imag
          + 2.0 * w.cst.real + 1j * TWO_PI * df * tc)
    log_i0 = 0.5 * (math.log(math.pi) - math.log(a)) + b * b / (4.0 * a) + a0
    log_i0 = log_i0 + 2.0 * math.log(w.amp)
    return a, b, log_i0, tc, delta


def _corr_integrals(w: WaveformModel, tau_q: float, tau_l: float,
                    df: float, polys: list[np.ndarray]) -> list[complex]:
    """Evaluate int P(u) * s(u+tc-tau_q) s*(u+tc-tau_l) e^{j2pi df (u+tc)} du
    for each polynomial P (coefficients in increasing powers of u)."""
    a, b, log_i0, _, _ = _corr_exponent(w, tau_q, tau_l, df)
    i0 = np.exp(log_i0)
    mu = b / (2.0 * a)
    var = 1.0 / (2.0 * a)
    order = max(len(p) for p in polys) - 1
    m = _gauss_moments(mu, var, order)
    return [i0 * sum(c * m[k] for k, c in enumerate(p)) for p in polys]


def _corr_polys(w: WaveformModel, tau_q: float, tau_l: float):
    """Polynomial factors (in the centered variable u) for all partials."""
    delta = 0.5 * (tau_q - tau_l)
    tc = 0.5 * (tau_q + tau_l)
    one = np.array([1.0 + 0j])
    t_poly = np.array([tc, 1.0], dtype=complex)           # t = u + tc
    lq = np.array([w.lin - 2.0 * w.quad * delta, 2.0 * w.quad])       # sdot/s at t-tau_q
    ll = np.array([np.conj(w.lin) + 2.0 * np.conj(w.quad) * delta,
                   2.0 * np.conj(w.quad)])                            # conj side at t-tau_l
    t2_poly = _poly_mul(t_poly, t_poly)
    return {
        "value": one,
        "d_tau": -lq,
        "d_f": 1j * TWO_PI * t_poly,
        "d2_tautau": _poly_mul(lq, ll),
        "d2_ff": 4.0 * math.pi ** 2 * t2_poly,
        "d2_tauf": 1j * TWO_PI * _poly_mul(t_poly, lq),
        "d2_tauq2": _poly_mul(lq, lq) + np.array([2.0 * w.quad, 0, 0]),
    }


def cross_corr(w: WaveformModel, delta_tau: float | None = None,
               delta_f: float = 0.0, tau_q: float | None = None,
               tau_l: float | None = None, method: str = "analytic") -> CrossCorr:
    """Cross-correlation Y and its delay/Doppler partials.

    Any two of (delta_tau, tau_q, tau_l) determine the third via
    delta_tau = tau_q - tau_l; inconsistent triples raise ValueError.
    method is "analytic" (closed form) or "quad" (adaptive Gauss-Kronrod,
    raising QuadratureError when the requested tolerance is not reached).
    """
    if tau_q is None and tau_l is None:
        if delta_tau is None:
            raise ValueError("specify delta_tau or the pair (tau_q, tau_l)")
        tau_q, tau_l = float(delta_tau), 0.0
    elif tau_q is None:
        if delta_tau is None:
            raise ValueError("tau_l alone does not determine the offsets")
        tau_q = float(tau_l) + float(delta_tau)
    elif tau_l is None:
        tau_l = float(tau_q) - float(delta_tau) if delta_tau is not None else 0.0
    tau_q, tau_l = float(tau_q), float(tau_l)
    if delta_tau is not None and not math.isclose(
            tau_q - tau_l, delta_tau, rel_tol=1e-9, abs_tol=1e-18):
        raise ValueError("delta_tau inconsistent with tau_q - tau_l")

    polys = _corr_polys(w, tau_q, tau_l)
    names = ["value", "d_tau", "d_f", "d2_tautau", "d2_ff", "d2_tauf", "d2_tauq2"]
    if method == "analytic":
        vals = _corr_integrals(w, tau_q, tau_l, delta_f, [polys[n] for n in names])
    elif method == "quad":
        vals = [_quad_corr(w, tau_q, tau_l, delta_f, polys[n]) for n in names]
    else:
        raise ValueError(f"unknown method {method!r}")
    by = dict(zip(names, vals))
    return CrossCorr(value=by["value"], d_tau=by["d_tau"], d_f=by["d_f"],
                     d2_tautau=by["d2_tautau"], d2_ff=by["d2_ff"],
                     d2_tauf=by["d2_tauf"], d2_tauq2=by["d2_tauq2"],
                     d2_fq2=-by["d2_ff"], d2_taufq=-by["d2_tauf"])


def _quad_corr(w: WaveformModel, tau_q: float, tau_l: float, df: float,
               poly: np.ndarray) -> complex:
    tc = 0.5 * (tau_q + tau_l)
    half = _QUAD_WINDOW * w.pulse_width + 0.5 * abs(tau_q - tau_l)
    # normalize so the integrand is O(1): unit envelope peak, unit poly scale
    pscale = max(abs(c) * half ** k for k, c in enumerate(poly)) or 1.0
    norm = w.amp ** 2 * pscale

    def integrand(u: float) -> complex:
        t = u + tc
        pw = sum(c * u ** k for k, c in enumerate(poly)) / pscale
        return (pw * w(t - tau_q) * np.conj(w(t - tau_l))
                * np.exp(1j * TWO_PI * df * t)) / w.amp ** 2

    re, re_err = quad(lambda u: integrand(u).real, -half, half,
                      epsabs=_QUAD_ABS_TOL, epsrel=1e-10, limit=2000)
    im, im_err = quad(lambda u: integrand(u).imag, -half, half,
                      epsabs=_QUAD_ABS_TOL, epsrel=1e-10, limit=2000)
    achieved = max(re_err, im_err) / max(1.0, half)
    if achieved > 1e-7:
        raise QuadratureError("cross-correlation quadrature did not converge", achieved)
    return complex(re, im) * norm


def corr_value_grid(w: WaveformModel, delta_tau, delta_f) -> np.ndarray:
    """Vectorized correlation value over broadcastable delay/Doppler offsets.

    Equivalent to cross_corr(w, dt, df).value with tau_q = dt, tau_l = 0.
    """
    dt = np.asarray(delta_tau, dtype=float)
    df = np.asarray(delta_f, dtype=float)
    a = -2.0 * w.quad.real
    delta = 0.5 * dt
    tc = 0.5 * dt
    b = -4j * delta * w.quad.imag + 2.0 * w.lin.real + 1j * TWO_PI * df
    a0 = (2.0 * delta * delta * w.quad.real - 2j * delta * w.lin.imag
          + 2.0 * w.cst.real + 1j * TWO_PI * df * tc)
    log_i0 = (0.5 * (math.log(math.pi) - math.log(a)) + b * b / (4.0 * a) + a0
              + 2.0 * math.log(w.amp))
    return np.exp(log_i0)


# ---------------------------------------------------------------------------
# Ambiguity function and resolution thresholds
# ---------------------------------------------------------------------------

def ambiguity_map(w: WaveformModel, tau_grid, f_grid) -> np.ndarray:
    """|AF|^2 on a delay-Doppler grid, normalized to unit peak.

    Returns shape (len(tau_grid), len(f_grid)). Grids must be finite and
    sorted ascending.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    f_grid = np.asarray(f_grid, dtype=float)
    for g, name in ((tau_grid, "tau_grid"), (f_grid, "f_grid")):
        if g.ndim != 1 or not np.all(np.isfinite(g)) or np.any(np.diff(g) < 0):
            raise ValueError(f"{name} must be a finite sorted 1-D grid")
    vals = corr_value_grid(w, tau_grid[:, None], f_grid[None, :])
    af = np.abs(vals) ** 2
    return af / af.max()


def _abs_corr_cut(w: WaveformModel, x: float, axis: str) -> float:
    if axis == "tau":
        return float(np.abs(corr_value_grid(w, x, 0.0)))
    return float(np.abs(corr_value_grid(w, 0.0, x)))


def _resolution(w: WaveformModel, axis: str, threshold: float) -> float:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    step = w.pulse_width if axis == "tau" else 1.0 / w.pulse_width
    hi = step
    for _ in range(200):
        if _abs_corr_cut(w, hi, axis) < threshold:
            break
        hi *= 2.0
    else:
        raise QuadratureError(f"no {axis} resolution crossing found", math.inf)
    return brentq(lambda x: _abs_corr_cut(w, x, axis) - threshold, 0.0, hi,
                  xtol=1e-15, rtol=1e-13)


def delay_resolution(w: WaveformModel, threshold: float = 0.1) -> float:
    """Smallest delay offset where |Y| drops below the threshold."""
    return _resolution(w, "tau", threshold)


def doppler_resolution(w: WaveformModel, threshold: float = 0.1) -> float:
    """Smallest Doppler offset where |Y| drops below the threshold."""
    return _resolution(w, "f", threshold)


def per_transmitter(waveforms, n_tx: int) -> list[WaveformModel]:
    """Normalize a waveform argument to one model per transmitter.

    Accepts a single WaveformModel (broadcast to all transmitters) or a
    sequence of exactly n_tx models.
    """
    if isinstance(waveforms, WaveformModel):
        return [waveforms] * n_tx
    out = list(waveforms)
    if len(out) != n_tx:
        raise WaveformError(f"expected {n_tx} waveforms, got {len(out)}")
    if not all(isinstance(w, WaveformModel) for w in out):
        raise WaveformError("waveforms must be WaveformModel instances")
    return out
