"""Fisher information matrices and CRLBs for joint location-velocity sensing.

Single-target: per-link delay/Doppler information blocks (A, B, D), the
delay/Doppler-to-RCS couplings (G, E) and the RCS block (F), chained through
the geometric spread matrix into the accurate 4x4 bound

    C_acc = ( Aleph (Phi - Psi F^-1 Psi^T) Aleph^T )^-1

and the cheaper approximate bound C_app = (Aleph Phi Aleph^T)^-1, which never
exceeds C_acc on the diagonal.

Multi-target: the full block information matrix over all targets' delay,
Doppler and RCS parameters, with structural coupling (off-diagonal blocks
from the mutual delay-Doppler correlation) and additive coupling folded into
each diagonal block via the noiseless expected log-likelihood. Inversion of
the chained matrix yields per-target accurate bounds; dropping the
off-diagonal blocks yields the decoupled approximation.

All condition numbers are computed after Jacobi equilibration (symmetric
diagonal scaling), so they measure intrinsic degeneracy rather than unit
mismatch between location, velocity and RCS rows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .scenario import (
    SPEED_OF_LIGHT,
    GeometricSpread,
    Scenario,
    geometric_spread,
    path_params,
)
from .waveform import (
    WaveformModel,
    cross_corr,
    delay_resolution,
    doppler_resolution,
    moments,
    per_transmitter,
)

TWO_PI = 2.0 * np.pi

# per-link gate: the compact Doppler second moment is valid when tau << T_eff
_SECOND_MOMENT_GATE = 0.01
_DEFAULT_COND_LIMIT = 1e12


class SingularInformationError(RuntimeError):
    """The information matrix is too ill-conditioned to invert reliably."""


class NumericalConsistencyWarning(UserWarning):
    """A numerically delicate fallback path (e.g. pseudo-inverse) was used."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FimBundle:
    """Per-link single-target information blocks, stored as diagonals.

    a, b, d are the delay/Doppler second-moment diagonals; (g_re, g_im) and
    (e_re, e_im) couple delay resp. Doppler to the real/imaginary RCS parts;
    f is the (common) RCS diagonal 2 f_s P rho_n / sigma_z^2.
    """

    a: np.ndarray
    b: np.ndarray
    d: np.ndarray
    g_re: np.ndarray
    g_im: np.ndarray
    e_re: np.ndarray
    e_im: np.ndarray
    f: np.ndarray
    aleph: GeometricSpread

    @property
    def n_links(self) -> int:
        return self.a.shape[0]

    def phi(self) -> np.ndarray:
        """[[A, B], [B, D]] as a dense 2NK x 2NK matrix."""
        nk = self.n_links
        out = np.zeros((2 * nk, 2 * nk))
        idx = np.arange(nk)
        out[idx, idx] = self.a
        out[idx, nk + idx] = self.b
        out[nk + idx, idx] = self.b
        out[nk + idx, nk + idx] = self.d
        return out

    def psi_f_inv_psi(self) -> np.ndarray:
        """Psi F^-1 Psi^T, the RCS-coupling correction to phi (2NK x 2NK)."""
        nk = self.n_links
        gg = (self.g_re ** 2 + self.g_im ** 2) / self.f
        ge = (self.g_re * self.e_re + self.g_im * self.e_im) / self.f
        ee = (self.e_re ** 2 + self.e_im ** 2) / self.f
        out = np.zeros((2 * nk, 2 * nk))
        idx = np.arange(nk)
        out[idx, idx] = gg
        out[idx, nk + idx] = ge
        out[nk + idx, idx] = ge
        out[nk + idx, nk + idx] = ee
        return out

    def info_accurate(self) -> np.ndarray:
        """4x4 location-velocity information Aleph (Phi - Psi F^-1 Psi^T) Aleph^T."""
        al = self.aleph.matrix
        return al @ (self.phi() - self.psi_f_inv_psi()) @ al.T

    def info_approx(self) -> np.ndarray:
        """4x4 approximate information Aleph Phi Aleph^T."""
        al = self.aleph.matrix
        return al @ self.phi() @ al.T


@dataclass(frozen=True)
class TightnessReport:
    """Trace-ratio diagnostics for the approximate-bound validity."""

    trace_ratio_delay: float            # Tr(G F^-1 G^T) / Tr(A)
    trace_ratio_doppler: float          # Tr(E F^-1 E^T) / Tr(D)
    waveform_freq_ratios: np.ndarray    # per active link, mean_freq^2 / sebw
    waveform_time_ratios: np.ndarray    # per active link, (mean_time + tau)^2 / setw
    threshold: float
    tight: bool


@dataclass(frozen=True)
class CrlbReport:
    """Accurate and approximate joint location-velocity bounds for one target."""

    c_accurate: np.ndarray   # 4x4, m^2 / m^2/s^2 blocks
    c_approx: np.ndarray     # 4x4
    loc_crlb: float          # trace of accurate location block, m^2
    vel_crlb: float          # trace of accurate velocity block, m^2/s^2
    loc_crlb_approx: float
    vel_crlb_approx: float
    condition_number: float  # equilibrated condition of the accurate information
    tightness: TightnessReport | None = None


@dataclass(frozen=True)
class SafetyMetrics:
    """Delay/Doppler resolution thresholds mapped to physical separations."""

    tau_r: float             # s
    f_r: float               # Hz
    safety_distance: float   # m, tau_r * c / 2
    safety_velocity: float   # m/s, lambda * f_r / 2
    threshold: float


@dataclass(frozen=True)
class MultiFim:
    """Full multi-target information in observable coordinates.

    j_phi is the (Q*4NK)^2 symmetric PSD matrix over per-target parameter
    groups [tau_1..NK, f_1..NK, alpha_re, alpha_im]: diagonal blocks are the
    pure single-target blocks (under the exact noiseless expectation the
    additive coupling from other targets' echoes cancels against the
    quadratic cross terms), off-diagonal blocks carry the structural
    coupling. j_coupled holds each target's diagonal block *with* the
    additive coupling retained; that variant feeds the decoupled
    (block-diagonal) approximate bound, where dropping the off-diagonal
    blocks is compensated by keeping the other targets' echo energy.
    """

    j_phi: np.ndarray
    j_coupled: tuple         # tuple[np.ndarray, ...], each 4NK x 4NK
    alephs: tuple            # tuple[GeometricSpread, ...]
    n_links: int
    n_targets: int

    def block(self, q: int, l: int) -> np.ndarray:
        m = 4 * self.n_links
        return self.j_phi[q * m:(q + 1) * m, l * m:(l + 1) * m]

    def lambda_q(self, q: int) -> np.ndarray:
        """(4+2NK) x 4NK chain matrix diag{aleph_q, I_2NK}."""
        nk = self.n_links
        out = np.zeros((4 + 2 * nk, 4 * nk))
        out[:4, :2 * nk] = self.alephs[q].matrix
        out[4:, 2 * nk:] = np.eye(2 * nk)
        return out

    def j_theta(self) -> np.ndarray:
        """Chained information for the stacked state (loc, vel, RCS) per target."""
        lams = [self.lambda_q(q) for q in range(self.n_targets)]
        m = 4 * self.n_links
        p = 4 + 2 * self.n_links
        out = np.zeros((self.n_targets * p, self.n_targets * p))
        for q in range(self.n_targets):
            for l in range(self.n_targets):
                out[q * p:(q + 1) * p, l * p:(l + 1) * p] = (
                    lams[q] @ self.j_phi[q * m:(q + 1) * m, l * m:(l + 1) * m] @ lams[l].T)
        return out


@dataclass(frozen=True)
class TargetCrlb:
    """Per-target multi-target bounds: accurate, decoupled, single-target."""

    c_accurate: np.ndarray
    c_decoupled: np.ndarray
    c_single: np.ndarray
    loc_crlb: float
    vel_crlb: float
    loc_crlb_decoupled: float
    vel_crlb_decoupled: float
    loc_crlb_single: float
    vel_crlb_single: float


@dataclass(frozen=True)
class MultiCrlbReport:
    targets: tuple               # tuple[TargetCrlb, ...]
    condition_number: float      # equilibrated, of the full chained information
    used_pseudo_inverse: bool


# ---------------------------------------------------------------------------
# Linear algebra helpers
# ---------------------------------------------------------------------------

def equilibrated_inverse(m: np.ndarray, cond_limit: float = _DEFAULT_COND_LIMIT,
                         allow_pinv: bool = False):
    """Invert a symmetric PSD information matrix with Jacobi equilibration.

    Returns (inverse, condition_number, used_pinv). Raises
    SingularInformationError when the equilibrated condition number exceeds
    cond_limit and allow_pinv is False.
    """
    m = np.asarray(m, dtype=float)
    diag = np.diag(m).copy()
    if np.any(diag <= 0) or not np.all(np.isfinite(m)):
        if not allow_pinv:
            raise SingularInformationError(
                "information matrix has a nonpositive diagonal; the scene "
                "provides no information on some coordinate (more links or "
                "nonzero velocity coupling needed)")
        diag = np.where(diag > 0, diag, 1.0)
    scale = 1.0 / np.sqrt(diag)
    ms = m * scale[:, None] * scale[None, :]
    cond = float(np.linalg.cond(ms))
    if cond > cond_limit or not np.isfinite(cond):
        if not allow_pinv:
            raise SingularInformationError(
                f"information matrix condition number {cond:.3e} exceeds "
                f"{cond_limit:.1e}; add links, spread geometry, or use "
                "nonzero velocity coupling")
        warnings.warn(
            f"information matrix condition number {cond:.3e}; falling back "
            "to a pseudo-inverse", NumericalConsistencyWarning, stacklevel=2)
        inv_s = np.linalg.pinv(ms, rcond=1e-12, hermitian=True)
        return inv_s * scale[:, None] * scale[None, :], cond, True
    inv_s = np.linalg.inv(ms)
    inv_s = 0.5 * (inv_s + inv_s.T)
    return inv_s * scale[:, None] * scale[None, :], cond, False


def _require_noise(scenario: Scenario):
    if scenario.radio.noise_var_w <= 0:
        raise ValueError("noise_var_w must be positive for information analysis")


def _use_exact_moment(tau: float, t_eff: float, override: bool | None) -> bool:
    if override is not None:
        return override
    return tau >= _SECOND_MOMENT_GATE * t_eff


def _compact_moment_psd_safe(mm, tau: float, cross_im: float) -> bool:
    four_pi2 = 4.0 * np.pi ** 2
    mean1 = mm.mean_time + tau
    centered_im = mm.cross_term.imag + TWO_PI * mm.mean_freq * mm.mean_time
    ok_raw = cross_im ** 2 <= four_pi2 * mm.sebw * mm.setw
    ok_schur = centered_im ** 2 <= four_pi2 \
        * (mm.sebw - mm.mean_freq ** 2) * (mm.setw - mean1 ** 2)
    return ok_raw and ok_schur


# ---------------------------------------------------------------------------
# Single-target FIM / CRLB
# ---------------------------------------------------------------------------

def single_target_fim(scenario: Scenario, waveforms, target_index: int = 0,
                      exact_second_moment: bool | None = None) -> FimBundle:
    """Assemble the per-link single-target information diagonals.

    The Doppler second moment uses the compact waveform moment only when the
    link delay is below 1% of the effective time width (or per the explicit
    override); otherwise the delayed-pulse second moment is used. The compact
    moment is also skipped when it would break the per-link positive
    semidefiniteness b^2 <= a*d (possible for off-center subcarriers, whose
    delay-shifted cross term outgrows the unshifted moment). All other
    entries are exact for the Gaussian family.
    """
    _require_noise(scenario)
    radio = scenario.radio
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    tgt = scenario.targets[target_index]
    params = path_params(scenario, target_index)
    n_tx, n_rx = scenario.nodes.n_tx, scenario.nodes.n_rx
    nk = n_tx * n_rx
    a = np.zeros(nk)
    b = np.zeros(nk)
    d = np.zeros(nk)
    g_re = np.zeros(nk)
    g_im = np.zeros(nk)
    e_re = np.zeros(nk)
    e_im = np.zeros(nk)
    f = np.zeros(nk)
    mom = [moments(w) for w in wfs]
    for n in range(n_tx):
        kappa_n = (2.0 * radio.sample_rate_hz * radio.total_energy_j
                   * radio.energy_alloc[n] / radio.noise_var_w)
        mm = mom[n]
        for k in range(n_rx):
            j = n * n_rx + k
            tau = params[j].tau
            alpha = tgt.rcs[n, k]
            p2 = abs(alpha) ** 2
            cross_im = mm.cross_term_at(tau).imag
            if _use_exact_moment(tau, radio.effective_time_width_s, exact_second_moment):
                m2 = mm.second_time_moment(tau)
            else:
                m2 = mm.setw
                if exact_second_moment is None and not _compact_moment_psd_safe(
                        mm, tau, cross_im):
                    # the compact moment pairs with exact cross/coupling
                    # terms; under the automatic gate fall back to the
                    # delayed-pulse moment whenever that pairing would break
                    # the per-link semidefiniteness, raw or with the RCS
                    # couplings Schur-complemented out
                    m2 = mm.second_time_moment(tau)
            a[j] = kappa_n * p2 * 4.0 * np.pi ** 2 * mm.sebw
            b[j] = kappa_n * p2 * TWO_PI * cross_im
            d[j] = kappa_n * p2 * 4.0 * np.pi ** 2 * m2
            mu1 = -1j * TWO_PI * mm.mean_freq
            mu2 = 1j * TWO_PI * (mm.mean_time + tau)
            g_re[j] = -kappa_n * (np.conj(alpha) * mu1).real
            g_im[j] = kappa_n * (np.conj(alpha) * mu1).imag
            e_re[j] = -kappa_n * (np.conj(alpha) * mu2).real
            e_im[j] = kappa_n * (np.conj(alpha) * mu2).imag
            f[j] = kappa_n
    return FimBundle(a=a, b=b, d=d, g_re=g_re, g_im=g_im, e_re=e_re, e_im=e_im,
                     f=f, aleph=geometric_spread(scenario, target_index))


def crlb_single(bundle: FimBundle, cond_limit: float = _DEFAULT_COND_LIMIT,
                tightness: TightnessReport | None = None) -> CrlbReport:
    """Accurate and approximate 4x4 bounds from a single-target bundle."""
    m_acc = bundle.info_accurate()
    m_app = bundle.info_approx()
    c_acc, cond, _ = equilibrated_inverse(m_acc, cond_limit)
    c_app, _, _ = equilibrated_inverse(m_app, cond_limit)
    # diagonal accuracy of the inverses degrades with conditioning
    slack = 1.0 + max(1e-9, 1e-13 * cond)
    assert np.all(np.diag(c_app) <= np.diag(c_acc) * slack), \
        "approximate bound exceeded the accurate bound (ordering violated)"
    return CrlbReport(
        c_accurate=c_acc, c_approx=c_app,
        loc_crlb=float(np.trace(c_acc[:2, :2])),
        vel_crlb=float(np.trace(c_acc[2:, 2:])),
        loc_crlb_approx=float(np.trace(c_app[:2, :2])),
        vel_crlb_approx=float(np.trace(c_app[2:, 2:])),
        condition_number=cond, tightness=tightness)


def crlb_static(scenario: Scenario, waveforms, target_index: int = 0,
                cond_limit: float = _DEFAULT_COND_LIMIT) -> tuple[float, float]:
    """Location-only bounds (x, y) for a static target.

    Inverts the 2x2 delay-route information b11 A b11^T; raises ValueError
    for a moving target and SingularInformationError on rank deficiency
    (e.g. a single link cannot localize in 2-D).
    """
    tgt = scenario.targets[target_index]
    if np.any(tgt.velocity != 0):
        raise ValueError("static localization bound requires zero velocity")
    bundle = single_target_fim(scenario, waveforms, target_index)
    b11 = bundle.aleph.b11
    m = b11 @ np.diag(bundle.a) @ b11.T
    c, _, _ = equilibrated_inverse(m, cond_limit)
    return float(c[0, 0]), float(c[1, 1])


def tightness_check(scenario: Scenario, waveforms, target_index: int = 0,
                    threshold: float = 0.01) -> TightnessReport:
    """Trace-ratio diagnostics for approximate-bound validity.

    The approximate bound drops the RCS-coupling correction, which is
    negligible exactly when Tr(G F^-1 G^T) << Tr(A) and
    Tr(E F^-1 E^T) << Tr(D). Links with zero RCS carry no weight and drop
    out of both traces.
    """
    bundle = single_target_fim(scenario, waveforms, target_index)
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    params = path_params(scenario, target_index)
    tgt = scenario.targets[target_index]
    n_rx = scenario.nodes.n_rx
    tr_a = bundle.a.sum()
    tr_d = bundle.d.sum()
    tr_g = ((bundle.g_re ** 2 + bundle.g_im ** 2) / bundle.f).sum()
    tr_e = ((bundle.e_re ** 2 + bundle.e_im ** 2) / bundle.f).sum()
    ratio_g = float(tr_g / tr_a) if tr_a > 0 else np.inf
    ratio_e = float(tr_e / tr_d) if tr_d > 0 else np.inf
    freq_ratios = []
    time_ratios = []
    for n in range(scenario.nodes.n_tx):
        mm = moments(wfs[n])
        for k in range(n_rx):
            if tgt.rcs[n, k] == 0:
                continue
            tau = params[n * n_rx + k].tau
            freq_ratios.append(mm.mean_freq ** 2 / mm.sebw)
            time_ratios.append((mm.mean_time + tau) ** 2 / mm.setw)
    return TightnessReport(
        trace_ratio_delay=ratio_g, trace_ratio_doppler=ratio_e,
        waveform_freq_ratios=np.array(freq_ratios),
        waveform_time_ratios=np.array(time_ratios),
        threshold=threshold,
        tight=bool(ratio_g <= threshold and ratio_e <= threshold))


def safety_metrics(w: WaveformModel, wavelength_m: float,
                   threshold: float = 0.1) -> SafetyMetrics:
    """Separations beyond which two targets decouple in delay or Doppler."""
    tau_r = delay_resolution(w, threshold)
    f_r = doppler_resolution(w, threshold)
    return SafetyMetrics(tau_r=tau_r, f_r=f_r,
                         safety_distance=tau_r * SPEED_OF_LIGHT / 2.0,
                         safety_velocity=wavelength_m * f_r / 2.0,
                         threshold=threshold)


def bandwidth_insensitivity_identity_errors(bundle: FimBundle) -> tuple[float, float]:
    """Relative errors of the two projection identities behind the
    bandwidth-insensitivity of the location block (exact in the centered
    large-chirp Gaussian limit).

    Identity 1: b11 B b12^T = b11 B b22^T Y^-1 (b12 D b22^T)^T
    Identity 2: b11 A b11^T = b11 B b22^T Y^-1 (b11 B b22^T)^T
    with Y = b22 D b22^T.
    """
    al = bundle.aleph
    b11, b12, b22 = al.b11, al.b12, al.b22
    a_m, b_m, d_m = np.diag(bundle.a), np.diag(bundle.b), np.diag(bundle.d)
    y = b22 @ d_m @ b22.T
    y_inv = np.linalg.inv(y)
    lhs1 = b11 @ b_m @ b12.T
    rhs1 = (b11 @ b_m @ b22.T) @ y_inv @ (b12 @ d_m @ b22.T).T
    lhs2 = b11 @ a_m @ b11.T
    rhs2 = (b11 @ b_m @ b22.T) @ y_inv @ (b11 @ b_m @ b22.T).T
    # symmetric geometries cancel the signed sums exactly; scale the residual
    # by the entrywise-absolute products so the metric stays meaningful there
    abs1 = np.abs(b11) @ np.abs(b_m) @ np.abs(b12).T
    abs2 = np.abs(b11) @ np.abs(a_m) @ np.abs(b11).T
    scale1 = max(np.linalg.norm(lhs1), np.linalg.norm(abs1), 1e-300)
    scale2 = max(np.linalg.norm(lhs2), np.linalg.norm(abs2), 1e-300)
    err1 = float(np.linalg.norm(lhs1 - rhs1) / scale1)
    err2 = float(np.linalg.norm(lhs2 - rhs2) / scale2)
    return err1, err2


# ---------------------------------------------------------------------------
# Multi-target FIM / CRLB
# ---------------------------------------------------------------------------

def _single_block(bundle: FimBundle) -> np.ndarray:
    """Dense 4NK x 4NK single-target information in [tau, f, aRe, aIm] order."""
    nk = bundle.n_links
    out = np.zeros((4 * nk, 4 * nk))
    idx = np.arange(nk)

    def put(r, c, vals):
        out[r * nk + idx, c * nk + idx] = vals
        if r != c:
            out[c * nk + idx, r * nk + idx] = vals

    put(0, 0, bundle.a)
    put(0, 1, bundle.b)
    put(0, 2, bundle.g_re)
    put(0, 3, bundle.g_im)
    put(1, 1, bundle.d)
    put(1, 2, bundle.e_re)
    put(1, 3, bundle.e_im)
    put(2, 2, bundle.f)
    put(3, 3, bundle.f)
    return out


def multi_target_fim(scenario: Scenario, waveforms,
                     exact_second_moment: bool | None = None) -> MultiFim:
    """Assemble the full multi-target information matrix over Q targets.

    Off-diagonal blocks carry the structural coupling built from the mutual
    correlation derivatives; diagonal blocks of j_phi are the exact
    single-target blocks (the additive echo coupling cancels under the
    noiseless expectation -- verified against a finite-difference Hessian of
    the full log-likelihood). The coupled diagonal variants, with the other
    targets' echo terms retained, are kept alongside for the decoupled
    approximate bound.
    """
    _require_noise(scenario)
    radio = scenario.radio
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    n_tx, n_rx = scenario.nodes.n_tx, scenario.nodes.n_rx
    nk = n_tx * n_rx
    n_t = scenario.n_targets
    m = 4 * nk

    all_params = [path_params(scenario, q) for q in range(n_t)]
    bundles = [single_target_fim(scenario, waveforms, q, exact_second_moment)
               for q in range(n_t)]
    singles = [_single_block(bu) for bu in bundles]
    coupled = [s.copy() for s in singles]

    big = np.zeros((n_t * m, n_t * m))
    for q in range(n_t):
        big[q * m:(q + 1) * m, q * m:(q + 1) * m] = singles[q]

    kappa = (2.0 * radio.sample_rate_hz * radio.total_energy_j
             * radio.energy_alloc / radio.noise_var_w)  # per transmitter

    for q in range(n_t):
        for l in range(q + 1, n_t):
            off = np.zeros((m, m))
            for n in range(n_tx):
                w = wfs[n]
                for k in range(n_rx):
                    j = n * n_rx + k
                    aq = scenario.targets[q].rcs[n, k]
                    al_ = scenario.targets[l].rcs[n, k]
                    tau_q = all_params[q][j].tau
                    tau_l = all_params[l][j].tau
                    df = all_params[q][j].doppler - all_params[l][j].doppler
                    cc = cross_corr(w, delta_f=df, tau_q=tau_q, tau_l=tau_l)
                    cc_r = cross_corr(w, delta_f=-df, tau_q=tau_l, tau_l=tau_q)
                    kap = kappa[n]
                    _fill_structural(off, j, nk, kap, aq, al_, cc, cc_r)
                    _add_coupling(coupled[q], j, nk, kap, aq, al_, cc)
                    _add_coupling(coupled[l], j, nk, kap, al_, aq, cc_r)
            big[q * m:(q + 1) * m, l * m:(l + 1) * m] = off
            big[l * m:(l + 1) * m, q * m:(q + 1) * m] = off.T

    return MultiFim(j_phi=big, j_coupled=tuple(coupled),
                    alephs=tuple(bu.aleph for bu in bundles),
                    n_links=nk, n_targets=n_t)


def _fill_structural(off: np.ndarray, j: int, nk: int, kap: float,
                     aq: complex, al: complex, cc, cc_r):
    """Cross-target block entries for one link (rows target q, cols target l)."""
    qa = aq * np.conj(al)
    rows = [j, nk + j, 2 * nk + j, 3 * nk + j]  # tau, f, aRe, aIm
    vals = np.empty((4, 4))
    vals[0, 0] = (qa * cc.d2_tautau).real
    vals[0, 1] = (qa * cc.d2_tauf).real
    vals[0, 2] = (aq * cc.d_tau).real
    vals[0, 3] = (aq * cc.d_tau).imag
    vals[1, 0] = (qa * np.conj(cc_r.d2_tauf)).real
    vals[1, 1] = (qa * cc.d2_ff).real
    vals[1, 2] = (aq * cc.d_f).real
    vals[1, 3] = (aq * cc.d_f).imag
    vals[2, 0] = (al * cc_r.d_tau).real
    vals[2, 1] = (al * cc_r.d_f).real
    vals[2, 2] = cc.value.real
    vals[2, 3] = cc.value.imag
    vals[3, 0] = (al * cc_r.d_tau).imag
    vals[3, 1] = (al * cc_r.d_f).imag
    vals[3, 2] = -cc.value.imag
    vals[3, 3] = cc.value.real
    for r in range(4):
        for c in range(4):
            off[rows[r], rows[c]] = kap * vals[r, c]


def _add_coupling(coup: np.ndarray, j: int, nk: int, kap: float,
                  aq: complex, al: complex, cc):
    """Additive coupling of target l's echo into target q's diagonal block."""
    qa = aq * np.conj(al)
    rows = [j, nk + j, 2 * nk + j, 3 * nk + j]
    tt = -kap * (qa * cc.d2_tauq2).real
    tf = -kap * (qa * cc.d2_taufq).real
    ff = -kap * (qa * cc.d2_fq2).real
    t_re = -kap * (np.conj(al) * cc.d_tau).real
    t_im = kap * (np.conj(al) * cc.d_tau).imag
    f_re = -kap * (np.conj(al) * cc.d_f).real
    f_im = kap * (np.conj(al) * cc.d_f).imag
    coup[rows[0], rows[0]] += tt
    coup[rows[1], rows[1]] += ff
    for (r, c, v) in ((0, 1, tf), (0, 2, t_re), (0, 3, t_im),
                      (1, 2, f_re), (1, 3, f_im)):
        coup[rows[r], rows[c]] += v
        coup[rows[c], rows[r]] += v


def crlb_multi(mfim: MultiFim, cond_limit: float = _DEFAULT_COND_LIMIT) -> MultiCrlbReport:
    """Per-target accurate, decoupled-approximate and single-target bounds.

    The accurate bounds come from inverting the full chained information
    (pseudo-inverse fallback with a warning when ill-conditioned, e.g. for
    coincident targets); the decoupled bounds drop cross-target blocks but
    keep the additive echo coupling in each diagonal block; the
    single-target references drop both coupling mechanisms.
    """
    p = 4 + 2 * mfim.n_links
    j_theta = mfim.j_theta()
    c_full, cond, used_pinv = equilibrated_inverse(j_theta, cond_limit, allow_pinv=True)
    out = []
    for q in range(mfim.n_targets):
        lam = mfim.lambda_q(q)
        c_acc = c_full[q * p:q * p + 4, q * p:q * p + 4]
        j_dec = lam @ mfim.j_coupled[q] @ lam.T
        c_dec, _, _ = equilibrated_inverse(j_dec, cond_limit, allow_pinv=True)
        j_sng = lam @ mfim.block(q, q) @ lam.T
        c_sng, _, _ = equilibrated_inverse(j_sng, cond_limit, allow_pinv=True)
        out.append(TargetCrlb(
            c_accurate=c_acc, c_decoupled=c_dec[:4, :4], c_single=c_sng[:4, :4],
            loc_crlb=float(np.trace(c_acc[:2, :2])),
            vel_crlb=float(np.trace(c_acc[2:4, 2:4])),
            loc_crlb_decoupled=float(np.trace(c_dec[:2, :2])),
            vel_crlb_decoupled=float(np.trace(c_dec[2:4, 2:4])),
            loc_crlb_single=float(np.trace(c_sng[:2, :2])),
            vel_crlb_single=float(np.trace(c_sng[2:4, 2:4]))))
    return MultiCrlbReport(targets=tuple(out), condition_number=cond,
                           used_pseudo_inverse=used_pinv)
