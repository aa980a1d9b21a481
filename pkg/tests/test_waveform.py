import numpy as np
import pytest

from dmsense.waveform import (
    QuadratureError,
    WaveformError,
    ambiguity_map,
    corr_value_grid,
    cross_corr,
    delay_resolution,
    doppler_resolution,
    make_waveform,
    moments,
    per_transmitter,
)

from oracles import fft_freq_moments, quad_energy, quad_sigma_tf, quad_time_moments

FAMILY = [("ofdm", 1, 1e-3, None), ("ofdm", 3, 1e-3, None), ("ofdm", 1, 1e-2, None),
          ("ocdm", 1, 1e-3, 12), ("ocdm", 1, 1e-3, 128), ("ocdm", 5, 1e-2, 16),
          ("ocdm", 128, 1e-2, 128)]


def test_construction_errors():
    with pytest.raises(WaveformError):
        make_waveform("ofdm", 1, -1e-3)
    with pytest.raises(WaveformError):
        make_waveform("ocdm", 3, 1e-3, 2)   # n > M
    with pytest.raises(WaveformError):
        make_waveform("ocdm", 1, 1e-3)      # missing M
    with pytest.raises(WaveformError):
        make_waveform("lfm", 1, 1e-3)


def test_peak_value_ofdm():
    w = make_waveform("ofdm", 1, 1e-3)
    assert w(0.0) == pytest.approx((2.0 / 1e-6) ** 0.25, rel=1e-14)
    assert abs(w(0.0) - 37.606) < 1e-3


def test_ocdm_envelope_matches_ofdm():
    # the chirp is a pure phase factor: |s| identical to the plain envelope
    t = np.linspace(-5e-3, 5e-3, 501)
    w_ofdm = make_waveform("ofdm", 1, 1e-3)
    w_ocdm = make_waveform("ocdm", 1, 1e-3, 128)
    assert np.allclose(np.abs(w_ocdm(t)), np.abs(w_ofdm(t)), rtol=1e-13, atol=0)


@pytest.mark.parametrize("kind,n,t_w,m", FAMILY)
def test_unit_energy(kind, n, t_w, m):
    w = make_waveform(kind, n, t_w, m)
    assert quad_energy(w) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kind,n,t_w,m", FAMILY)
def test_moments_match_oracles(kind, n, t_w, m):
    w = make_waveform(kind, n, t_w, m)
    mm = moments(w)
    t1, t2 = quad_time_moments(w)
    f1, f2 = fft_freq_moments(w)
    assert mm.setw == pytest.approx(t2, rel=1e-8)
    assert mm.mean_time == pytest.approx(t1, abs=1e-8 * np.sqrt(t2))
    assert mm.sebw == pytest.approx(f2, rel=1e-8)
    assert mm.mean_freq == pytest.approx(f1, abs=1e-8 * np.sqrt(f2))
    for tau in (0.0, 3e-5):
        assert mm.cross_term_at(tau) == pytest.approx(quad_sigma_tf(w, tau), rel=1e-6)


@pytest.mark.parametrize("kind,n,t_w,m", FAMILY)
def test_moment_inequalities(kind, n, t_w, m):
    mm = moments(make_waveform(kind, n, t_w, m))
    assert mm.sebw > 0 and mm.setw > 0
    assert mm.mean_freq ** 2 <= mm.sebw * (1 + 1e-12)
    assert mm.mean_time ** 2 <= mm.setw
    # real part of the cross term is 1/2 for the Gaussian family
    assert abs(mm.cross_term.real) == pytest.approx(0.5, rel=1e-12)
    # uncertainty product is nonnegative
    assert mm.sebw * mm.setw - abs(mm.cross_term) ** 2 / (4 * np.pi ** 2) >= -1e-12


@pytest.mark.parametrize("m", [None, 12, 128])
def test_uncertainty_equality_for_centered_subcarrier(m):
    # equality case of the uncertainty product: first subcarrier, zero delay
    kind = "ofdm" if m is None else "ocdm"
    mm = moments(make_waveform(kind, 1, 1e-3, m))
    prod = mm.sebw * mm.setw
    assert prod == pytest.approx(abs(mm.cross_term) ** 2 / (4 * np.pi ** 2), rel=1e-8)


def test_ocdm_sebw_closed_form():
    t_w = 1e-3
    for m in (1, 12, 128):
        mm = moments(make_waveform("ocdm", 1, t_w, m))
        assert mm.sebw == pytest.approx((1 + m * m) / (4 * np.pi * t_w ** 2), rel=1e-12)
    mm = moments(make_waveform("ofdm", 1, t_w))
    assert mm.sebw == pytest.approx(1.0 / (4 * np.pi * t_w ** 2), rel=1e-12)
    assert mm.setw == pytest.approx(t_w ** 2 / (4 * np.pi), rel=1e-12)


def test_cross_corr_at_zero_is_one():
    w = make_waveform("ocdm", 2, 1e-3, 16)
    cc = cross_corr(w, delta_tau=0.0, delta_f=0.0)
    assert cc.value == pytest.approx(1.0, abs=1e-14)


def test_cross_corr_peak_bound_and_decay():
    rng = np.random.default_rng(11)
    for kind, n, t_w, m in [("ofdm", 1, 1e-3, None), ("ocdm", 3, 1e-3, 32)]:
        w = make_waveform(kind, n, t_w, m)
        for _ in range(40):
            dt = rng.uniform(-3 * t_w, 3 * t_w)
            df = rng.uniform(-3 / t_w, 3 / t_w)
            assert abs(cross_corr(w, dt, df).value) <= 1.0 + 1e-12
        assert abs(cross_corr(w, 3 * t_w, 0.0).value) < 1e-6
        assert abs(cross_corr(w, 3.01 * t_w, 123.0).value) < 1e-4
    # Doppler-domain decay at 3*sqrt(sebw) needs a chirped waveform (M >= 3);
    # for plain subcarriers that offset sits below the Doppler resolution.
    for m in (12, 128):
        w = make_waveform("ocdm", 1, 1e-3, m)
        df = 3.0 * np.sqrt(moments(w).sebw)
        assert abs(cross_corr(w, 0.0, df).value) < 1e-4


def test_cross_corr_argument_resolution():
    w = make_waveform("ofdm", 1, 1e-3)
    a = cross_corr(w, delta_tau=2e-4, delta_f=50.0)
    b = cross_corr(w, delta_f=50.0, tau_q=2e-4, tau_l=0.0)
    assert a.value == b.value
    with pytest.raises(ValueError):
        cross_corr(w, delta_tau=1e-4, delta_f=0.0, tau_q=5e-4, tau_l=0.0)
    with pytest.raises(ValueError):
        cross_corr(w, delta_f=0.0)


def test_cross_corr_analytic_matches_quadrature():
    rng = np.random.default_rng(5)
    for kind, n, t_w, m in [("ofdm", 2, 1e-3, None), ("ocdm", 3, 1e-3, 32)]:
        w = make_waveform(kind, n, t_w, m)
        tau_r = delay_resolution(w)
        for _ in range(3):
            tq = rng.uniform(-1.5 * tau_r, 1.5 * tau_r)
            tl = rng.uniform(-1.5 * tau_r, 1.5 * tau_r)
            df = rng.uniform(-2 / t_w, 2 / t_w)
            ca = cross_corr(w, tau_q=tq, tau_l=tl, delta_f=df)
            cq = cross_corr(w, tau_q=tq, tau_l=tl, delta_f=df, method="quad")
            scale = max(abs(ca.d2_tautau), abs(ca.d2_ff), 1.0)
            for fld in ("value", "d_tau", "d_f", "d2_tautau", "d2_ff", "d2_tauf",
                        "d2_tauq2", "d2_fq2", "d2_taufq"):
                a, q = getattr(ca, fld), getattr(cq, fld)
                assert abs(a - q) <= 1e-4 * max(abs(q), 1e-8 * scale), fld


def test_cross_corr_partials_match_finite_differences():
    rng = np.random.default_rng(17)
    for kind, n, t_w, m in [("ofdm", 1, 1e-3, None), ("ocdm", 3, 1e-3, 32)]:
        w = make_waveform(kind, n, t_w, m)
        tau_r = delay_resolution(w)

        def val(tq, tl, df):
            return cross_corr(w, tau_q=tq, tau_l=tl, delta_f=df).value

        for _ in range(3):
            tq = rng.uniform(-tau_r, tau_r)
            tl = rng.uniform(-tau_r, tau_r)
            df = rng.uniform(-2 / t_w, 2 / t_w)
            cc = cross_corr(w, tau_q=tq, tau_l=tl, delta_f=df)
            ht = 2e-5 * tau_r
            hf = 2e-4 / t_w
            d_tau = (val(tq + ht, tl, df) - val(tq - ht, tl, df)) / (2 * ht)
            d_f = (val(tq, tl, df + hf) - val(tq, tl, df - hf)) / (2 * hf)
            assert cc.d_tau == pytest.approx(d_tau, rel=1e-4)
            assert cc.d_f == pytest.approx(d_f, rel=1e-4)
            ht2 = 1e-4 * tau_r
            hf2 = 1e-3 / t_w
            dtt = (val(tq + ht2, tl + ht2, df) - val(tq + ht2, tl - ht2, df)
                   - val(tq - ht2, tl + ht2, df) + val(tq - ht2, tl - ht2, df)) / (4 * ht2 ** 2)
            # value depends on df = f_q - f_l: d/df_l = -d/d(df)
            dff = -(val(tq, tl, df + hf2) - 2 * val(tq, tl, df)
                    + val(tq, tl, df - hf2)) / hf2 ** 2
            dtf = -(val(tq + ht2, tl, df + hf2) - val(tq + ht2, tl, df - hf2)
                    - val(tq - ht2, tl, df + hf2) + val(tq - ht2, tl, df - hf2)) / (4 * ht2 * hf2)
            dtq2 = (val(tq + ht2, tl, df) - 2 * val(tq, tl, df)
                    + val(tq - ht2, tl, df)) / ht2 ** 2
            dfq2 = (val(tq, tl, df + hf2) - 2 * val(tq, tl, df)
                    + val(tq, tl, df - hf2)) / hf2 ** 2
            dtfq = (val(tq + ht2, tl, df + hf2) - val(tq + ht2, tl, df - hf2)
                    - val(tq - ht2, tl, df + hf2) + val(tq - ht2, tl, df - hf2)) / (4 * ht2 * hf2)
            assert cc.d2_tautau == pytest.approx(dtt, rel=1e-4)
            assert cc.d2_ff == pytest.approx(dff, rel=1e-4)
            assert cc.d2_tauf == pytest.approx(dtf, rel=1e-4)
            assert cc.d2_tauq2 == pytest.approx(dtq2, rel=1e-4)
            assert cc.d2_fq2 == pytest.approx(dfq2, rel=1e-4)
            assert cc.d2_taufq == pytest.approx(dtfq, rel=1e-4)


def test_cross_corr_coincidence_matches_moments():
    # at zero separation the first partials are the spectral/temporal means
    w = make_waveform("ocdm", 4, 1e-3, 32)
    mm = moments(w)
    tau = 5e-4
    cc = cross_corr(w, delta_tau=0.0, delta_f=0.0, tau_q=tau, tau_l=tau)
    assert cc.d_tau == pytest.approx(-2j * np.pi * mm.mean_freq, rel=1e-12)
    assert cc.d_f == pytest.approx(2j * np.pi * (mm.mean_time + tau), rel=1e-12)
    assert cc.d2_tautau == pytest.approx(4 * np.pi ** 2 * mm.sebw, rel=1e-12)
    assert cc.d2_ff == pytest.approx(4 * np.pi ** 2 * mm.second_time_moment(tau), rel=1e-12)
    assert cc.d2_taufq == pytest.approx(2j * np.pi * mm.cross_term_at(tau), rel=1e-12)


def test_quadrature_failure_raises_with_tolerance():
    # extreme Doppler offset: millions of cycles across the window defeat
    # the adaptive rule, which must report the tolerance it actually reached
    w = make_waveform("ocdm", 1, 1e-3, 128)
    with pytest.raises(QuadratureError) as err:
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cross_corr(w, tau_q=2e-4, tau_l=-2e-4, delta_f=1e7, method="quad")
    assert err.value.achieved_tol > 0


def test_ambiguity_map_peak_and_consistency():
    w = make_waveform("ocdm", 1, 1e-3, 16)
    tau_r = delay_resolution(w)
    f_r = doppler_resolution(w)
    taus = np.linspace(-2 * tau_r, 2 * tau_r, 41)
    fs = np.linspace(-2 * f_r, 2 * f_r, 41)
    af = ambiguity_map(w, taus, fs)
    # peak at the grid point nearest the origin
    it, jf = np.unravel_index(np.argmax(af), af.shape)
    assert abs(taus[it]) == np.abs(taus).min()
    assert abs(fs[jf]) == np.abs(fs).min()
    assert af.max() == 1.0
    # zero-velocity cut equals |cross_corr(dt, 0)|^2
    cut = af[:, np.argmin(np.abs(fs))]
    ref = np.array([abs(cross_corr(w, dt, 0.0).value) ** 2 for dt in taus])
    assert np.allclose(cut, ref, rtol=1e-10, atol=1e-300)


def test_ambiguity_mainlobe_ratio_matches_bandwidth_ratio():
    # -3 dB delay mainlobe width shrinks by about the effective-bandwidth ratio
    t_w = 1e-3
    w_ofdm = make_waveform("ofdm", 1, t_w)
    w_ocdm = make_waveform("ocdm", 1, t_w, 128)

    def half_width(w):
        taus = np.linspace(0, 3 * delay_resolution(w), 4001)
        vals = np.abs(corr_value_grid(w, taus, 0.0)) ** 2
        return taus[np.argmax(vals < 0.5)]

    ratio = half_width(w_ofdm) / half_width(w_ocdm)
    bw_ratio = np.sqrt(moments(w_ocdm).sebw / moments(w_ofdm).sebw)
    assert ratio == pytest.approx(bw_ratio, rel=0.02)


def test_resolution_thresholds():
    w = make_waveform("ocdm", 1, 1e-3, 128)
    tau_r = delay_resolution(w, threshold=0.1)
    f_r = doppler_resolution(w, threshold=0.1)
    assert abs(cross_corr(w, tau_r, 0.0).value) == pytest.approx(0.1, abs=1e-9)
    assert abs(cross_corr(w, 0.0, f_r).value) == pytest.approx(0.1, abs=1e-9)
    # closed forms for the centered chirp
    assert tau_r == pytest.approx(1e-3 * np.sqrt(2 * np.log(10) / (np.pi * (1 + 128 ** 2))),
                                  rel=1e-9)
    assert f_r == pytest.approx(np.sqrt(2 * np.log(10) / np.pi) / 1e-3, rel=1e-9)


def test_per_transmitter_normalization():
    w = make_waveform("ofdm", 1, 1e-3)
    assert per_transmitter(w, 3) == [w, w, w]
    assert per_transmitter([w, w], 2) == [w, w]
    with pytest.raises(WaveformError):
        per_transmitter([w], 3)
