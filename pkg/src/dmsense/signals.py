"""Discrete received-signal synthesis, log-likelihoods, grid MLE, Monte Carlo.

Sampling convention: samples are taken at t_i = i * t_s, i = 1..S, over a
window [0, T_win) with T_win = max link delay + 6 T + guard, and every pulse
envelope is shifted by a common known offset of 3 T (T = largest pulse width)
so its full Gaussian support lies inside the window. The offset is a known
timing constant shared by synthesis and matched filtering; the concentrated
likelihood is invariant to it because the unknown complex RCS absorbs any
common phase reference.

Noise is circular complex Gaussian, generated by counter-based per-link
streams (Philox keyed by the seed and the link index), so synthesis is
bit-reproducible and independent of evaluation order.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fim import crlb_single, safety_metrics, single_target_fim
from .scenario import Scenario
from .waveform import cross_corr, per_transmitter

TWO_PI = 2.0 * np.pi

_MAGIC = b"DMSR1"
_COND_REG_LIMIT = 1e12


class RegularizedCorrelationWarning(UserWarning):
    """The multi-target matched-correlation matrix needed regularization."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReceivedSignal:
    """Sampled baseband returns for every (transmitter, receiver) link."""

    samples: np.ndarray       # (N, K, S) complex128
    sample_times: np.ndarray  # (S,) seconds, t_i = i * t_s
    noise_seed: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        t = np.asarray(self.sample_times, dtype=float)
        if s.ndim != 3 or t.ndim != 1 or s.shape[2] != t.shape[0]:
            raise ValueError("samples must be (N, K, S) matching sample_times")
        if not np.all(np.isfinite(s.view(float))):
            raise ValueError("samples contain non-finite values")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "sample_times", t)

    @property
    def sample_rate_hz(self) -> float:
        return 1.0 / (self.sample_times[1] - self.sample_times[0])


@dataclass(frozen=True)
class MleGrid:
    """Coarse-to-fine search region for the 4-D location/velocity grid."""

    loc_center: np.ndarray      # (2,) m
    loc_halfwidth: np.ndarray   # (2,) m
    vel_center: np.ndarray      # (2,) m/s
    vel_halfwidth: np.ndarray   # (2,) m/s
    coarse_points: int = 11
    refinement_levels: int = 4
    shrink_factor: float = 0.2

    def __post_init__(self):
        for name in ("loc_center", "loc_halfwidth", "vel_center", "vel_halfwidth"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (2,)).copy()
            object.__setattr__(self, name, v)
        if self.coarse_points < 3:
            raise ValueError("coarse_points must be at least 3 per axis")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("shrink_factor must lie in (0, 1)")
        if self.refinement_levels < 0:
            raise ValueError("refinement_levels must be nonnegative")


@dataclass(frozen=True)
class MleResult:
    est_location: np.ndarray   # (2,) m
    est_velocity: np.ndarray   # (2,) m/s
    est_rcs: np.ndarray        # (N, K) complex
    llf_value: float
    grid_evaluations: int
    flags: tuple = field(default=())


@dataclass(frozen=True)
class McRow:
    senr_db: float
    mse_location: float        # m^2, squared error summed over x,y
    mse_velocity: float        # (m/s)^2
    crlb_location: float
    crlb_velocity: float
    trials: int


@dataclass(frozen=True)
class MonteCarloReport:
    rows: tuple                # tuple[McRow, ...]
    seed: int


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

def pulse_offset(waveforms, n_tx: int) -> float:
    """Common known timing offset placing pulse centers at tau + 3 T."""
    return 3.0 * max(w.pulse_width for w in per_transmitter(waveforms, n_tx))


def _link_geometry(scenario: Scenario, loc, vel):
    """Delays and Dopplers of all links for an arbitrary (loc, vel) candidate."""
    loc = np.asarray(loc, dtype=float)
    vel = np.asarray(vel, dtype=float)
    lam = scenario.radio.wavelength_m
    d_tx = scenario.nodes.tx_positions - loc  # (N, 2)
    d_rx = scenario.nodes.rx_positions - loc  # (K, 2)
    r_tx = np.linalg.norm(d_tx, axis=1)
    r_rx = np.linalg.norm(d_rx, axis=1)
    taus = (r_tx[:, None] + r_rx[None, :]) / 299_792_458.0
    u_tx = d_tx / r_tx[:, None]
    u_rx = d_rx / r_rx[:, None]
    dops = ((u_tx @ vel)[:, None] + (u_rx @ vel)[None, :]) / lam
    return taus, dops


def sample_window(scenario: Scenario, waveforms) -> np.ndarray:
    """Sample times t_i = i * t_s covering every delayed pulse."""
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    t_s = 1.0 / scenario.radio.sample_rate_hz
    max_tau = 0.0
    for q in range(scenario.n_targets):
        taus, _ = _link_geometry(scenario, scenario.targets[q].location,
                                 scenario.targets[q].velocity)
        max_tau = max(max_tau, float(taus.max()))
    t_win = max_tau + 6.0 * max(w.pulse_width for w in wfs) + 2.0 * t_s
    n_s = int(round(t_win / t_s))
    return np.arange(1, n_s + 1) * t_s


def synthesize(scenario: Scenario, waveforms, seed: int = 0) -> ReceivedSignal:
    """Sampled multi-target returns plus circular complex Gaussian noise.

    Deterministic in (scenario, waveforms, seed); per-link noise streams are
    independent Philox generators spawned from the seed.
    """
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    radio = scenario.radio
    n_tx, n_rx = scenario.nodes.n_tx, scenario.nodes.n_rx
    times = sample_window(scenario, waveforms)
    off = pulse_offset(wfs, n_tx)
    out = np.zeros((n_tx, n_rx, times.shape[0]), dtype=complex)
    for q, tgt in enumerate(scenario.targets):
        taus, dops = _link_geometry(scenario, tgt.location, tgt.velocity)
        for n in range(n_tx):
            amp_n = np.sqrt(radio.total_energy_j * radio.energy_alloc[n]) \
                * radio.beam_weights[n] * radio.symbol
            for k in range(n_rx):
                out[n, k] += (tgt.rcs[n, k] * amp_n
                              * wfs[n](times - off - taus[n, k])
                              * np.exp(1j * TWO_PI * dops[n, k] * times))
    sigma = np.sqrt(radio.noise_var_w / 2.0)
    streams = np.random.SeedSequence(seed).spawn(n_tx * n_rx)
    for n in range(n_tx):
        for k in range(n_rx):
            rng = np.random.Generator(np.random.Philox(streams[n * n_rx + k]))
            noise = rng.normal(size=times.shape[0]) + 1j * rng.normal(size=times.shape[0])
            out[n, k] += sigma * noise
    return ReceivedSignal(samples=out, sample_times=times, noise_seed=int(seed))


# ---------------------------------------------------------------------------
# Binary dump (little-endian, bit-exact across platforms)
# ---------------------------------------------------------------------------

def dump_received(sig: ReceivedSignal, path):
    """Write magic 'DMSR1', N/K/S uint32, f_s float64, then complex64 blocks."""
    n, k, s = sig.samples.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", n, k, s))
        fh.write(struct.pack("<d", sig.sample_rate_hz))
        fh.write(np.ascontiguousarray(sig.samples, dtype="<c8").tobytes())


def load_received(path) -> tuple[np.ndarray, float]:
    """Read a dumped signal; returns (samples (N,K,S) complex64, f_s)."""
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        n, k, s = struct.unpack("<III", fh.read(12))
        f_s, = struct.unpack("<d", fh.read(8))
        data = np.frombuffer(fh.read(n * k * s * 8), dtype="<c8")
    return data.reshape(n, k, s).copy(), f_s


# ---------------------------------------------------------------------------
# Log-likelihoods
# ---------------------------------------------------------------------------

def _matched_sums(sig: ReceivedSignal, scenario: Scenario, wfs, loc, vel) -> np.ndarray:
    """X_nk = sum_i r_nk(i) ytilde*_nk(i) for one candidate, all links."""
    radio = scenario.radio
    n_tx, n_rx = scenario.nodes.n_tx, scenario.nodes.n_rx
    times = sig.sample_times
    off = pulse_offset(wfs, n_tx)
    taus, dops = _link_geometry(scenario, loc, vel)
    x = np.empty((n_tx, n_rx), dtype=complex)
    for n in range(n_tx):
        amp_n = np.sqrt(radio.total_energy_j * radio.energy_alloc[n]) \
            * radio.beam_weights[n] * radio.symbol
        for k in range(n_rx):
            ytil = amp_n * wfs[n](times - off - taus[n, k]) \
                * np.exp(1j * TWO_PI * dops[n, k] * times)
            x[n, k] = np.sum(sig.samples[n, k] * np.conj(ytil))
    return x


def estimate_rcs(sig: ReceivedSignal, scenario: Scenario, waveforms, loc, vel) -> np.ndarray:
    """Closed-form RCS estimates at a candidate: X_nk / (f_s P rho_n |symbol|^2)."""
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    radio = scenario.radio
    x = _matched_sums(sig, scenario, wfs, loc, vel)
    denom = (radio.sample_rate_hz * radio.total_energy_j
             * radio.energy_alloc[:, None] * abs(radio.symbol) ** 2)
    return x / denom


def llf_single(sig: ReceivedSignal, scenario: Scenario, waveforms, candidate) -> float:
    """Concentrated single-target objective at a (location, velocity) candidate.

    Returns sum_nk |X_nk|^2 / (f_s P rho_n |symbol|^2), the log-likelihood
    with the per-link RCS replaced by its closed-form estimate; the constant
    1/sigma_z^2 factor is omitted so the objective stays defined for
    noiseless synthesis. Non-uniform energy allocation keeps its exact
    1/rho_n weighting rather than the uniform-allocation simplification.
    """
    loc, vel = candidate
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    radio = scenario.radio
    x = _matched_sums(sig, scenario, wfs, loc, vel)
    denom = (radio.sample_rate_hz * radio.total_energy_j
             * radio.energy_alloc[:, None] * abs(radio.symbol) ** 2)
    return float(np.sum(np.abs(x) ** 2 / denom))


def llf_multi(sig: ReceivedSignal, scenario: Scenario, waveforms, candidates) -> float:
    """Multi-target objective sum_nk d_nk^H Ytilde_nk^-1 d_nk.

    candidates is a sequence of (location, velocity) pairs. Ytilde is the
    matched-waveform cross-correlation matrix over the candidate targets;
    when its condition number exceeds 1e12 (e.g. coincident candidates) a
    small diagonal loading is added and RegularizedCorrelationWarning is
    emitted.
    """
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    radio = scenario.radio
    n_tx, n_rx = scenario.nodes.n_tx, scenario.nodes.n_rx
    times = sig.sample_times
    off = pulse_offset(wfs, n_tx)
    n_q = len(candidates)
    geo = [_link_geometry(scenario, loc, vel) for loc, vel in candidates]
    total = 0.0
    regularized = False
    for n in range(n_tx):
        p_n = radio.total_energy_j * radio.energy_alloc[n]
        amp_n = np.sqrt(p_n) * radio.beam_weights[n] * radio.symbol
        for k in range(n_rx):
            ytils = [amp_n * wfs[n](times - off - geo[q][0][n, k])
                     * np.exp(1j * TWO_PI * geo[q][1][n, k] * times)
                     for q in range(n_q)]
            d_vec = np.array([np.sum(sig.samples[n, k] * np.conj(y)) for y in ytils])
            gram = np.empty((n_q, n_q), dtype=complex)
            for q in range(n_q):
                for l in range(n_q):
                    cc = cross_corr(
                        wfs[n], delta_f=geo[q][1][n, k] - geo[l][1][n, k],
                        tau_q=geo[q][0][n, k] + off, tau_l=geo[l][0][n, k] + off)
                    gram[q, l] = p_n * cc.value
            if np.linalg.cond(gram) > _COND_REG_LIMIT:
                gram = gram + (1e-9 * np.trace(gram).real / n_q) * np.eye(n_q)
                regularized = True
            total += float((np.conj(d_vec) @ np.linalg.solve(gram, d_vec)).real)
    if regularized:
        warnings.warn("matched correlation matrix was near-singular; diagonal "
                      "loading applied", RegularizedCorrelationWarning, stacklevel=2)
    return total


# ---------------------------------------------------------------------------
# Grid MLE
# ---------------------------------------------------------------------------

def _llf_grid(sig: ReceivedSignal, scenario: Scenario, wfs, xs, ys, vxs, vys):
    """Objective over the 4-D grid; returns (values[L, V], locs[L,2], vels[V,2]).

    The Doppler phase factors over the two velocity axes (the frequency is
    linear in v for fixed location), so per link only 2 * len(v-axis) phase
    vectors are exponentiated instead of the full velocity grid.
    """
    radio = scenario.radio
    n_tx, n_rx = scenario.nodes.n_tx, scenario.nodes.n_rx
    times = sig.sample_times
    off = pulse_offset(wfs, n_tx)
    lam = radio.wavelength_m
    locs = np.array([(x, y) for x in xs for y in ys])
    vels = np.array([(vx, vy) for vx in vxs for vy in vys])
    denom = (radio.sample_rate_hz * radio.total_energy_j
             * radio.energy_alloc * abs(radio.symbol) ** 2)  # per tx
    amps = (np.sqrt(radio.total_energy_j * radio.energy_alloc)
            * radio.beam_weights * radio.symbol)
    n_vx, n_vy = len(vxs), len(vys)
    values = np.zeros((locs.shape[0], n_vx * n_vy))
    tx_pos, rx_pos = scenario.nodes.tx_positions, scenario.nodes.rx_positions
    vxs = np.asarray(vxs, dtype=float)
    vys = np.asarray(vys, dtype=float)
    for li, loc in enumerate(locs):
        d_tx = tx_pos - loc
        d_rx = rx_pos - loc
        r_tx = np.linalg.norm(d_tx, axis=1)
        r_rx = np.linalg.norm(d_rx, axis=1)
        u_sum = (d_tx / r_tx[:, None])[:, None, :] + (d_rx / r_rx[:, None])[None, :, :]
        taus = (r_tx[:, None] + r_rx[None, :]) / 299_792_458.0
        for n in range(n_tx):
            for k in range(n_rx):
                u = sig.samples[n, k] * np.conj(amps[n] * wfs[n](times - off - taus[n, k]))
                ex = np.exp((-1j * TWO_PI * u_sum[n, k, 0] / lam) * np.outer(vxs, times))
                ey = np.exp((-1j * TWO_PI * u_sum[n, k, 1] / lam) * np.outer(vys, times))
                x_nk = ex @ (ey * u).T
                values[li] += (np.abs(x_nk) ** 2 / denom[n]).reshape(-1)
    return values, locs, vels


def mle_single(sig: ReceivedSignal, scenario: Scenario, waveforms,
               grid: MleGrid) -> MleResult:
    """Coarse-to-fine grid maximization of the concentrated objective.

    Deterministic; refinement re-centers on the running best point and
    shrinks the half-widths, clamped inside the original region. A flag is
    raised when the coarse spacing exceeds the waveform resolution distances
    (risk of locking onto an ambiguity sidelobe).
    """
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    flags = []
    d_r = max(safety_metrics(w, scenario.radio.wavelength_m).safety_distance
              for w in wfs)
    v_r = max(safety_metrics(w, scenario.radio.wavelength_m).safety_velocity
              for w in wfs)
    pts = grid.coarse_points
    loc_step = 2.0 * grid.loc_halfwidth / (pts - 1)
    vel_step = 2.0 * grid.vel_halfwidth / (pts - 1)
    if np.any(loc_step > 2.0 * d_r):
        flags.append("coarse location spacing exceeds the delay-resolution distance")
    if np.any(vel_step > 2.0 * v_r):
        flags.append("coarse velocity spacing exceeds the Doppler-resolution velocity")

    lc, lh = grid.loc_center.copy(), grid.loc_halfwidth.copy()
    vc, vh = grid.vel_center.copy(), grid.vel_halfwidth.copy()
    lo_loc, hi_loc = lc - lh, lc + lh
    lo_vel, hi_vel = vc - vh, vc + vh
    evaluations = 0
    best_loc, best_vel, best_val = lc, vc, -np.inf
    for _ in range(grid.refinement_levels + 1):
        xs = np.linspace(lc[0] - lh[0], lc[0] + lh[0], pts)
        ys = np.linspace(lc[1] - lh[1], lc[1] + lh[1], pts)
        vxs = np.linspace(vc[0] - vh[0], vc[0] + vh[0], pts)
        vys = np.linspace(vc[1] - vh[1], vc[1] + vh[1], pts)
        values, locs, vels = _llf_grid(sig, scenario, wfs, xs, ys, vxs, vys)
        evaluations += values.size
        li, vi = np.unravel_index(np.argmax(values), values.shape)
        if values[li, vi] > best_val:
            best_val = float(values[li, vi])
            best_loc, best_vel = locs[li], vels[vi]
        lh = lh * grid.shrink_factor
        vh = vh * grid.shrink_factor
        lc = np.clip(best_loc, lo_loc + lh, hi_loc - lh)
        vc = np.clip(best_vel, lo_vel + vh, hi_vel - vh)
    rcs_hat = estimate_rcs(sig, scenario, waveforms, best_loc, best_vel)
    return MleResult(est_location=best_loc, est_velocity=best_vel,
                     est_rcs=rcs_hat, llf_value=best_val,
                     grid_evaluations=evaluations, flags=tuple(flags))


def mle_multi_decoupled(sig: ReceivedSignal, scenario: Scenario, waveforms,
                        grids) -> list[MleResult]:
    """Per-target grid search of the decoupled multi-target objective.

    Valid for targets separated beyond the safety distance or velocity; the
    separation is checked post-hoc on the estimates and flagged if violated.
    """
    wfs = per_transmitter(waveforms, scenario.nodes.n_tx)
    results = [mle_single(sig, scenario, waveforms, g) for g in grids]
    d_r = max(safety_metrics(w, scenario.radio.wavelength_m).safety_distance
              for w in wfs)
    v_r = max(safety_metrics(w, scenario.radio.wavelength_m).safety_velocity
              for w in wfs)
    flagged = []
    for q in range(len(results)):
        extra = ()
        for l in range(len(results)):
            if l == q:
                continue
            d_loc = np.linalg.norm(results[q].est_location - results[l].est_location)
            d_vel = np.linalg.norm(results[q].est_velocity - results[l].est_velocity)
            if d_loc < d_r and d_vel < v_r:
                extra = (f"targets {q} and {l} closer than the safety "
                         "distance and velocity; decoupled estimates unreliable",)
        r = results[q]
        flagged.append(MleResult(est_location=r.est_location, est_velocity=r.est_velocity,
                                 est_rcs=r.est_rcs, llf_value=r.llf_value,
                                 grid_evaluations=r.grid_evaluations,
                                 flags=r.flags + extra))
    return flagged


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def _mc_trial(args):
    scen, waveforms, grid, trial_seed, truth_loc, truth_vel = args
    sig = synthesize(scen, waveforms, seed=trial_seed)
    est = mle_single(sig, scen, waveforms, grid)
    return (float(np.sum((est.est_location - truth_loc) ** 2)),
            float(np.sum((est.est_velocity - truth_vel) ** 2)))


def monte_carlo(scenario: Scenario, waveforms, grid: MleGrid, senr_db_list,
                trials: int, seed: int = 0, target_index: int = 0,
                workers: int = 1) -> MonteCarloReport:
    """MSE-versus-bound campaign over a list of SENR points (dB).

    For each SENR the noise variance is set to P / senr, `trials` independent
    signals are synthesized with counter-derived seeds, and the squared
    location/velocity errors of the grid MLE are averaged and paired with
    the accurate bound traces. Fully reproducible from `seed`: per-trial
    seeds are drawn by counter, and results are reduced in trial order
    regardless of the worker count.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    senr_db_list = list(senr_db_list)
    import dataclasses
    truth = scenario.targets[target_index]
    trial_seeds = np.random.SeedSequence(seed).generate_state(
        len(senr_db_list) * trials, dtype=np.uint64)
    rows = []
    for si, senr_db in enumerate(senr_db_list):
        sigma2 = scenario.radio.total_energy_j / 10.0 ** (senr_db / 10.0)
        radio = dataclasses.replace(scenario.radio, noise_var_w=sigma2)
        scen = dataclasses.replace(scenario, radio=radio)
        rep = crlb_single(single_target_fim(scen, waveforms, target_index))
        jobs = [(scen, waveforms, grid, int(trial_seeds[si * trials + t]),
                 truth.location, truth.velocity) for t in range(trials)]
        if workers > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=workers) as pool:
                errors = list(pool.map(_mc_trial, jobs, chunksize=4))
        else:
            errors = [_mc_trial(j) for j in jobs]
        se_loc = sum(e[0] for e in errors)
        se_vel = sum(e[1] for e in errors)
        rows.append(McRow(senr_db=float(senr_db), mse_location=se_loc / trials,
                          mse_velocity=se_vel / trials, crlb_location=rep.loc_crlb,
                          crlb_velocity=rep.vel_crlb, trials=trials))
    return MonteCarloReport(rows=tuple(rows), seed=int(seed))
