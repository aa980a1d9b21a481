"""Scene description for distributed multistatic sensing.

Owns node/target geometry and the per-link delay and Doppler maps, plus the
analytic derivatives that chain per-link (delay, Doppler) observables to the
target state (x, y, vx, vy).

Conventions
-----------
* 2-D Cartesian geometry, strict SI units (meters, seconds, Hz, watts).
* Links are ordered row-major over (transmitter n, receiver k):
  (1,1), (1,2), ..., (1,K), (2,1), ..., (N,K).
* The Doppler of a link is (1/lambda) * v^T (u_n + u_k) with u_m the unit
  vector pointing from the target toward node m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact

_UNIT_TOL = 1e-12


class DegenerateGeometryError(ValueError):
    """A transmitter or receiver coincides with a target location."""


class ScenarioValidationError(ValueError):
    """A scenario field violates one of its invariants."""


def _as_point(p, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ScenarioValidationError(f"{name} must be a 2-D point, got shape {np.shape(p)}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioValidationError(f"{name} contains non-finite values")
    return arr


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeSet:
    """Positions of the N transmitters and K receivers (meters)."""

    tx_positions: np.ndarray  # (N, 2)
    rx_positions: np.ndarray  # (K, 2)

    def __post_init__(self):
        tx = np.atleast_2d(np.asarray(self.tx_positions, dtype=float))
        rx = np.atleast_2d(np.asarray(self.rx_positions, dtype=float))
        if tx.ndim != 2 or tx.shape[1] != 2 or tx.shape[0] < 1:
            raise ScenarioValidationError(f"tx_positions must be (N,2) with N>=1, got {tx.shape}")
        if rx.ndim != 2 or rx.shape[1] != 2 or rx.shape[0] < 1:
            raise ScenarioValidationError(f"rx_positions must be (K,2) with K>=1, got {rx.shape}")
        object.__setattr__(self, "tx_positions", tx)
        object.__setattr__(self, "rx_positions", rx)

    @property
    def n_tx(self) -> int:
        return self.tx_positions.shape[0]

    @property
    def n_rx(self) -> int:
        return self.rx_positions.shape[0]


@dataclass(frozen=True)
class Target:
    """One point target: location, velocity, and per-link complex RCS.

    rcs[n, k] combines channel fading and radar cross-section for the
    (transmitter n, receiver k) link; entries may be zero (deep fade) but at
    least one must be nonzero.
    """

    location: np.ndarray  # (2,) m
    velocity: np.ndarray  # (2,) m/s
    rcs: np.ndarray       # (N, K) complex

    def __post_init__(self):
        loc = _as_point(self.location, "target location")
        vel = _as_point(self.velocity, "target velocity")
        rcs = np.atleast_2d(np.asarray(self.rcs, dtype=complex))
        if rcs.ndim != 2:
            raise ScenarioValidationError(f"rcs must be an N x K matrix, got shape {rcs.shape}")
        if not np.any(rcs != 0):
            raise ScenarioValidationError("rcs must contain at least one nonzero entry")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "rcs", rcs)


@dataclass(frozen=True)
class RadioConfig:
    """Carrier, energy, noise and sampling parameters shared by all links."""

    carrier_freq_hz: float
    total_energy_j: float          # P
    energy_alloc: np.ndarray       # rho, (N,), sums to 1
    beam_weights: np.ndarray       # b, (N,) complex, unit modulus
    symbol: complex                # data symbol, unit modulus
    noise_var_w: float             # sigma_z^2
    sample_rate_hz: float          # f_s
    effective_time_width_s: float  # T_eff

    def __post_init__(self):
        rho = np.asarray(self.energy_alloc, dtype=float).reshape(-1)
        b = np.asarray(self.beam_weights, dtype=complex).reshape(-1)
        if self.carrier_freq_hz <= 0:
            raise ScenarioValidationError("carrier_freq_hz must be positive")
        if self.total_energy_j <= 0:
            raise ScenarioValidationError("total_energy_j must be positive")
        if self.noise_var_w < 0:
            raise ScenarioValidationError("noise_var_w must be nonnegative")
        if np.any(rho < 0):
            raise ScenarioValidationError("energy_alloc entries must be nonnegative")
        if abs(rho.sum() - 1.0) > _UNIT_TOL:
            raise ScenarioValidationError(
                f"energy_alloc must sum to 1 within {_UNIT_TOL:g}, got {rho.sum()!r}")
        if rho.shape != b.shape:
            raise ScenarioValidationError("energy_alloc and beam_weights must have equal length")
        if np.any(np.abs(np.abs(b) - 1.0) > _UNIT_TOL):
            raise ScenarioValidationError("beam_weights must have unit modulus")
        if abs(abs(complex(self.symbol)) - 1.0) > _UNIT_TOL:
            raise ScenarioValidationError("symbol must have unit modulus")
        if self.sample_rate_hz <= 0 or self.effective_time_width_s <= 0:
            raise ScenarioValidationError("sample_rate_hz and effective_time_width_s must be positive")
        if round(self.sample_rate_hz * self.effective_time_width_s) < 2:
            raise ScenarioValidationError(
                "sample count round(f_s * T_eff) must be at least 2")
        object.__setattr__(self, "energy_alloc", rho)
        object.__setattr__(self, "beam_weights", b)
        object.__setattr__(self, "symbol", complex(self.symbol))

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @property
    def sample_count(self) -> int:
        """S = round(f_s * T_eff)."""
        return int(round(self.sample_rate_hz * self.effective_time_width_s))

    @property
    def senr(self) -> float:
        """Signal energy-to-noise ratio P / sigma_z^2 (linear)."""
        return self.total_energy_j / self.noise_var_w

    @property
    def scnr(self) -> float:
        """Signal-to-clutter-plus-noise ratio P / (T_eff * sigma_z^2)."""
        return self.senr / self.effective_time_width_s


@dataclass(frozen=True)
class Scenario:
    """Full experiment description: nodes, targets and radio parameters.

    Coincident targets are legal (conditioning is reported downstream, not
    forbidden), but no target may coincide with a node.
    """

    nodes: NodeSet
    targets: tuple  # tuple[Target, ...]
    radio: RadioConfig

    def __post_init__(self):
        targets = tuple(self.targets)
        if len(targets) < 1:
            raise ScenarioValidationError("at least one target is required")
        n, k = self.nodes.n_tx, self.nodes.n_rx
        if self.radio.energy_alloc.shape[0] != n:
            raise ScenarioValidationError(
                f"energy_alloc has length {self.radio.energy_alloc.shape[0]}, expected N={n}")
        for q, tgt in enumerate(targets):
            if tgt.rcs.shape != (n, k):
                raise ScenarioValidationError(
                    f"target {q}: rcs shape {tgt.rcs.shape} does not match (N,K)=({n},{k})")
            for label, pos in _iter_nodes(self.nodes):
                if np.array_equal(pos, tgt.location):
                    raise DegenerateGeometryError(
                        f"target {q} coincides with {label} at {tuple(pos)}")
        object.__setattr__(self, "targets", targets)

    @property
    def n_links(self) -> int:
        return self.nodes.n_tx * self.nodes.n_rx

    @property
    def n_targets(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class PathParams:
    """Delay/Doppler of one link plus derivatives w.r.t. the target state."""

    tau: float            # s
    doppler: float        # Hz
    d_tau_dl: np.ndarray  # (2,), s/m           (beta, zeta)
    d_f_dl: np.ndarray    # (2,), Hz/m          (eta, kappa)
    d_f_dv: np.ndarray    # (2,), Hz/(m/s)      (xi, varrho)


@dataclass(frozen=True)
class GeometricSpread:
    """4 x 2NK Jacobian chaining per-link (delay, Doppler) to (x, y, vx, vy).

    Block layout (columns: NK delays then NK Dopplers):

        [[ b11 | b12 ],
         [  0  | b22 ]]

    with b22 = -f_c * b11 identically; the zero block reflects that delays do
    not depend on velocity.
    """

    matrix: np.ndarray  # (4, 2*NK)
    n_links: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != 4 or m.shape[1] % 2 != 0:
            raise ScenarioValidationError(f"spread matrix must be (4, 2*NK), got {m.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "n_links", m.shape[1] // 2)

    @property
    def b11(self) -> np.ndarray:
        """(2, NK) delay-vs-location block (beta, zeta rows)."""
        return self.matrix[:2, : self.n_links]

    @property
    def b12(self) -> np.ndarray:
        """(2, NK) Doppler-vs-location block (eta, kappa rows)."""
        return self.matrix[:2, self.n_links:]

    @property
    def b22(self) -> np.ndarray:
        """(2, NK) Doppler-vs-velocity block (xi, varrho rows)."""
        return self.matrix[2:, self.n_links:]


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _iter_nodes(nodes: NodeSet):
    for n, pos in enumerate(nodes.tx_positions):
        yield f"transmitter {n}", pos
    for k, pos in enumerate(nodes.rx_positions):
        yield f"receiver {k}", pos


def _leg(node: np.ndarray, target_loc: np.ndarray, label: str) -> tuple[float, np.ndarray]:
    """Distance and unit vector from target toward the node."""
    diff = node - target_loc
    dist = float(np.hypot(diff[0], diff[1]))
    if dist == 0.0:
        raise DegenerateGeometryError(
            f"{label} at {tuple(node)} coincides with the target location")
    return dist, diff / dist


def compute_delay(tx, rx, target_loc, tx_label: str = "transmitter",
                  rx_label: str = "receiver") -> tuple[float, float, float]:
    """Bistatic propagation delays for one link.

    Returns (tau_n, tau_k, tau_nk) where tau_nk = tau_n + tau_k and each leg
    is Euclidean distance over the speed of light.
    """
    tx = _as_point(tx, "tx")
    rx = _as_point(rx, "rx")
    loc = _as_point(target_loc, "target_loc")
    rn, _ = _leg(tx, loc, tx_label)
    rk, _ = _leg(rx, loc, rx_label)
    tau_n = rn / SPEED_OF_LIGHT
    tau_k = rk / SPEED_OF_LIGHT
    return tau_n, tau_k, tau_n + tau_k


def compute_doppler(tx, rx, target: Target, wavelength_m: float) -> float:
    """Bistatic Doppler shift (Hz) of one link for a moving target.

    f = (1/lambda) * v^T (u_n + u_k), u_m pointing from target toward node m;
    positive when the target closes on the nodes.
    """
    tx = _as_point(tx, "tx")
    rx = _as_point(rx, "rx")
    _, u_n = _leg(tx, target.location, "transmitter")
    _, u_k = _leg(rx, target.location, "receiver")
    return float(target.velocity @ (u_n + u_k)) / wavelength_m


def path_params(scenario: Scenario, target_index: int = 0) -> list[PathParams]:
    """Per-link delay/Doppler and analytic state derivatives, link-ordered.

    The derivatives implement the closed forms

        d tau / d l = (1/c) [ (l - l_n)/r_n + (l - l_k)/r_k ]
        d f  / d v  = (1/lambda) (u_n + u_k)
        d f  / d l  = (1/lambda) sum_m ((u_m u_m^T - I)/r_m) v

    and are gated in the test suite against central finite differences.
    """
    tgt = scenario.targets[target_index]
    lam = scenario.radio.wavelength_m
    loc, vel = tgt.location, tgt.velocity
    eye = np.eye(2)
    out: list[PathParams] = []
    for n, tx in enumerate(scenario.nodes.tx_positions):
        rn, u_n = _leg(tx, loc, f"transmitter {n}")
        proj_n = (np.outer(u_n, u_n) - eye) / rn
        for k, rx in enumerate(scenario.nodes.rx_positions):
            rk, u_k = _leg(rx, loc, f"receiver {k}")
            tau = (rn + rk) / SPEED_OF_LIGHT
            usum = u_n + u_k
            doppler = float(vel @ usum) / lam
            d_tau_dl = -usum / SPEED_OF_LIGHT
            d_f_dv = usum / lam
            d_f_dl = ((proj_n + (np.outer(u_k, u_k) - eye) / rk) @ vel) / lam
            out.append(PathParams(tau=tau, doppler=doppler, d_tau_dl=d_tau_dl,
                                  d_f_dl=d_f_dl, d_f_dv=d_f_dv))
    return out


def geometric_spread(scenario: Scenario, target_index: int = 0) -> GeometricSpread:
    """Assemble the 4 x 2NK spread matrix for one target.

    Columns follow the row-major link order; the velocity rows of the delay
    block are identically zero and b22 = -f_c * b11 holds by construction of
    the closed forms (checked as an invariant in tests).
    """
    params = path_params(scenario, target_index)
    nk = len(params)
    m = np.zeros((4, 2 * nk))
    for j, p in enumerate(params):
        m[0:2, j] = p.d_tau_dl
        m[0:2, nk + j] = p.d_f_dl
        m[2:4, nk + j] = p.d_f_dv
    return GeometricSpread(matrix=m)
