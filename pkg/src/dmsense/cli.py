"""Batch command-line front end.

Scenario files are JSON with explicit SI units in field names; complex
numbers are [re, im] pairs. Schema (see also templates/):

    {
      "nodes":   {"tx_positions_m": [[x, y], ...],
                  "rx_positions_m": [[x, y], ...]},
      "targets": [{"location_m": [x, y], "velocity_mps": [vx, vy],
                   "rcs": [[[re, im], ...K], ...N]}],
      "radio":   {"carrier_freq_hz": ..., "total_energy_j": ...,
                  "energy_alloc": [...], "beam_weights": [[re, im], ...],
                  "symbol": [re, im], "noise_var_w": ...,
                  "sample_rate_hz": ..., "effective_time_width_s": ...},
      "waveforms": [{"kind": "ocdm"|"ofdm", "subcarrier": n,
                     "pulse_width_s": T, "num_chirps": M}, ...]
    }

"waveforms" holds either one entry (applied to every transmitter) or one per
transmitter. Exit codes: 0 success, 2 validation error, 3 numeric failure;
errors also appear as one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fim, signals, svgplot
from .scenario import (
    DegenerateGeometryError,
    NodeSet,
    RadioConfig,
    Scenario,
    ScenarioValidationError,
    Target,
)
from .waveform import (
    QuadratureError,
    WaveformError,
    WaveformModel,
    ambiguity_map,
    make_waveform,
    per_transmitter,
)

COMMANDS = ("crlb", "crlb-multi", "mle", "mc", "af", "sweep", "safety")
SWEEP_AXES = ("senr", "fs", "separation_x", "rel_velocity", "M", "T")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class JobSpec:
    command: str
    scenario_path: str
    output_path: str
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    plot: bool = False
    seed: int = 0
    trials: int = 200
    grid_spec: str | None = None
    target_index: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ScenarioValidationError(f"unknown command {self.command!r}")
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ScenarioValidationError(
                    f"unknown sweep axis {self.sweep_axis!r}; choose from {SWEEP_AXES}")
            if not self.sweep_values:
                raise ScenarioValidationError("sweep requires nonempty --values")
            vals = tuple(float(v) for v in self.sweep_values)
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ScenarioValidationError("sweep values must be sorted ascending")
            object.__setattr__(self, "sweep_values", vals)


# ---------------------------------------------------------------------------
# Scenario JSON I/O
# ---------------------------------------------------------------------------

def _complex(v, field: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ScenarioValidationError(f"{field}: expected a number or [re, im] pair, got {v!r}")


def _get(doc: dict, field: str, where: str):
    if field not in doc:
        raise ScenarioValidationError(f"{where}: missing required field {field!r}")
    return doc[field]


def scenario_from_doc(doc: dict) -> Scenario:
    nodes_doc = _get(doc, "nodes", "scenario")
    nodes = NodeSet(
        tx_positions=np.asarray(_get(nodes_doc, "tx_positions_m", "nodes"), dtype=float),
        rx_positions=np.asarray(_get(nodes_doc, "rx_positions_m", "nodes"), dtype=float))
    targets = []
    for qi, tdoc in enumerate(_get(doc, "targets", "scenario")):
        where = f"targets[{qi}]"
        rcs_raw = _get(tdoc, "rcs", where)
        rcs = np.array([[_complex(v, f"{where}.rcs") for v in row] for row in rcs_raw])
        targets.append(Target(location=_get(tdoc, "location_m", where),
                              velocity=_get(tdoc, "velocity_mps", where),
                              rcs=rcs))
    rdoc = _get(doc, "radio", "scenario")
    radio = RadioConfig(
        carrier_freq_hz=float(_get(rdoc, "carrier_freq_hz", "radio")),
        total_energy_j=float(_get(rdoc, "total_energy_j", "radio")),
        energy_alloc=np.asarray(_get(rdoc, "energy_alloc", "radio"), dtype=float),
        beam_weights=np.array([_complex(v, "radio.beam_weights")
                               for v in _get(rdoc, "beam_weights", "radio")]),
        symbol=_complex(_get(rdoc, "symbol", "radio"), "radio.symbol"),
        noise_var_w=float(_get(rdoc, "noise_var_w", "radio")),
        sample_rate_hz=float(_get(rdoc, "sample_rate_hz", "radio")),
        effective_time_width_s=float(_get(rdoc, "effective_time_width_s", "radio")))
    return Scenario(nodes=nodes, targets=targets, radio=radio)


def waveforms_from_doc(doc: dict, n_tx: int) -> list[WaveformModel]:
    wdocs = _get(doc, "waveforms", "scenario")
    if not isinstance(wdocs, list) or not wdocs:
        raise ScenarioValidationError("waveforms: expected a nonempty list")
    if len(wdocs) not in (1, n_tx):
        raise ScenarioValidationError(
            f"waveforms: expected 1 or {n_tx} entries, got {len(wdocs)}")
    out = []
    for wi, wdoc in enumerate(wdocs):
        where = f"waveforms[{wi}]"
        out.append(make_waveform(
            kind=_get(wdoc, "kind", where),
            subcarrier=int(wdoc.get("subcarrier", 1)),
            pulse_width=float(_get(wdoc, "pulse_width_s", where)),
            num_chirps=(int(wdoc["num_chirps"]) if "num_chirps" in wdoc else None)))
    return out if len(out) == n_tx else out * n_tx


def template_path(name: str) -> Path:
    """Path of a bundled scenario template, e.g. template_path('fig2a_ring')."""
    from importlib.resources import files
    p = Path(str(files("dmsense").joinpath("templates", f"{name}.json")))
    if not p.exists():
        raise FileNotFoundError(f"no bundled template named {name!r}")
    return p


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioValidationError(
                f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_doc(doc)


def load_job_inputs(path) -> tuple[Scenario, list[WaveformModel]]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioValidationError(
                f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    scen = scenario_from_doc(doc)
    return scen, waveforms_from_doc(doc, scen.nodes.n_tx)


def _cpx(v: complex):
    return [v.real, v.imag]


def scenario_to_doc(scenario: Scenario, waveforms=None) -> dict:
    doc = {
        "nodes": {
            "tx_positions_m": scenario.nodes.tx_positions.tolist(),
            "rx_positions_m": scenario.nodes.rx_positions.tolist(),
        },
        "targets": [{
            "location_m": t.location.tolist(),
            "velocity_mps": t.velocity.tolist(),
            "rcs": [[_cpx(v) for v in row] for row in t.rcs],
        } for t in scenario.targets],
        "radio": {
            "carrier_freq_hz": scenario.radio.carrier_freq_hz,
            "total_energy_j": scenario.radio.total_energy_j,
            "energy_alloc": scenario.radio.energy_alloc.tolist(),
            "beam_weights": [_cpx(v) for v in scenario.radio.beam_weights],
            "symbol": _cpx(scenario.radio.symbol),
            "noise_var_w": scenario.radio.noise_var_w,
            "sample_rate_hz": scenario.radio.sample_rate_hz,
            "effective_time_width_s": scenario.radio.effective_time_width_s,
        },
    }
    if waveforms is not None:
        wlist = per_transmitter(waveforms, scenario.nodes.n_tx)
        doc["waveforms"] = [{
            "kind": w.kind, "subcarrier": w.subcarrier,
            "pulse_width_s": w.pulse_width,
            **({"num_chirps": w.num_chirps} if w.num_chirps is not None else {}),
        } for w in wlist]
    return doc


def write_scenario(scenario: Scenario, path, waveforms=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_doc(scenario, waveforms), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# CSV / plotting helpers
# ---------------------------------------------------------------------------

def _fmt_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path, header: list[str], rows: list[list]):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _plot_table(path, header, rows, logy_cols, xlabel=None, logx=False,
                x_transform=None, title=""):
    svg_path = str(Path(path).with_suffix(".svg"))
    xs = [row[0] for row in rows]
    if x_transform is not None:
        xs = [x_transform(x) for x in xs]
    plot = svgplot.LinePlot(xlabel=xlabel or header[0], ylabel="value",
                            logx=logx, logy=bool(logy_cols), title=title)
    for ci in range(1, len(header)):
        if logy_cols and ci not in logy_cols:
            continue
        plot.add(header[ci], xs, [row[ci] for row in rows])
    plot.write(svg_path)
    return svg_path


# ---------------------------------------------------------------------------
# Sweep machinery
# ---------------------------------------------------------------------------

def _apply_axis(scenario: Scenario, waveforms, axis: str, value: float):
    """Return (scenario, waveforms) with one sweep axis applied."""
    radio = scenario.radio
    if axis == "senr":
        sigma2 = radio.total_energy_j / 10.0 ** (value / 10.0)
        return (dataclasses.replace(scenario, radio=dataclasses.replace(
            radio, noise_var_w=sigma2)), waveforms)
    if axis == "fs":
        return (dataclasses.replace(scenario, radio=dataclasses.replace(
            radio, sample_rate_hz=float(value))), waveforms)
    if axis == "M":
        m = int(round(value))
        new = [make_waveform(w.kind, min(w.subcarrier, m), w.pulse_width, m)
               if w.kind == "ocdm" else w for w in waveforms]
        if all(w.kind != "ocdm" for w in waveforms):
            raise ScenarioValidationError("M sweep requires at least one ocdm waveform")
        return scenario, new
    if axis == "T":
        t = float(value)
        new = [make_waveform(w.kind, w.subcarrier, t, w.num_chirps) for w in waveforms]
        # scenario templates pair the effective time width with the pulse width
        return (dataclasses.replace(scenario, radio=dataclasses.replace(
            radio, effective_time_width_s=t)), new)
    if axis == "separation_x":
        if scenario.n_targets < 2:
            raise ScenarioValidationError("separation_x sweep needs two targets")
        ref = scenario.targets[0]
        moved = dataclasses.replace(
            scenario.targets[1], location=ref.location + np.array([value, 0.0]))
        targets = (scenario.targets[0], moved) + scenario.targets[2:]
        return dataclasses.replace(scenario, targets=targets), waveforms
    if axis == "rel_velocity":
        if scenario.n_targets < 2:
            raise ScenarioValidationError("rel_velocity sweep needs two targets")
        ref = scenario.targets[0]
        moved = dataclasses.replace(
            scenario.targets[1], location=ref.location.copy(),
            velocity=ref.velocity + np.array([value, 0.0]))
        targets = (scenario.targets[0], moved) + scenario.targets[2:]
        return dataclasses.replace(scenario, targets=targets), waveforms
    raise ScenarioValidationError(f"unknown sweep axis {axis!r}")


_AXIS_COLUMN = {"senr": "senr_db", "fs": "fs_hz", "separation_x": "separation_x_m",
                "rel_velocity": "rel_velocity_mps", "M": "num_chirps", "T": "pulse_width_s"}


def _single_crlb_rows(scenario, waveforms, axis, values, target_index):
    header = [_AXIS_COLUMN[axis], "loc_crlb_m2", "vel_crlb_m2s2",
              "loc_crlb_approx_m2", "vel_crlb_approx_m2s2", "cond"]
    rows = []
    for v in values:
        scen, wfs = _apply_axis(scenario, waveforms, axis, v)
        rep = fim.crlb_single(fim.single_target_fim(scen, wfs, target_index))
        rows.append([float(v), rep.loc_crlb, rep.vel_crlb, rep.loc_crlb_approx,
                     rep.vel_crlb_approx, rep.condition_number])
    return header, rows


def _multi_crlb_rows(scenario, waveforms, axis, values, target_index):
    header = [_AXIS_COLUMN[axis], "loc_crlb_m2", "vel_crlb_m2s2",
              "loc_decoupled_m2", "vel_decoupled_m2s2",
              "loc_single_m2", "vel_single_m2s2", "cond", "pinv"]
    rows = []
    for v in values:
        scen, wfs = _apply_axis(scenario, waveforms, axis, v)
        rep = fim.crlb_multi(fim.multi_target_fim(scen, wfs))
        t = rep.targets[target_index]
        rows.append([float(v), t.loc_crlb, t.vel_crlb, t.loc_crlb_decoupled,
                     t.vel_crlb_decoupled, t.loc_crlb_single, t.vel_crlb_single,
                     rep.condition_number, int(rep.used_pseudo_inverse)])
    return header, rows


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _parse_grid_spec(spec: str | None, scenario: Scenario, waveforms,
                     target_index: int) -> signals.MleGrid:
    """Grid centered on the indexed target; spec 'LOC_HW:VEL_HW:POINTS:LEVELS'."""
    tgt = scenario.targets[target_index]
    if spec:
        parts = spec.split(":")
        if len(parts) not in (2, 3, 4, 5):
            raise ScenarioValidationError(
                "grid spec must be LOC_HW:VEL_HW[:POINTS[:LEVELS[:SHRINK]]]")
        loc_hw = float(parts[0])
        vel_hw = float(parts[1])
        points = int(parts[2]) if len(parts) > 2 else 11
        levels = int(parts[3]) if len(parts) > 3 else 4
        shrink = float(parts[4]) if len(parts) > 4 else 0.2
    else:
        rep = fim.crlb_single(fim.single_target_fim(scenario, waveforms, target_index))
        loc_hw = max(50.0, 4.0 * float(np.sqrt(rep.loc_crlb)))
        vel_hw = max(1.0, 4.0 * float(np.sqrt(rep.vel_crlb)))
        points, levels, shrink = 11, 4, 0.2
    return signals.MleGrid(loc_center=tgt.location, loc_halfwidth=loc_hw,
                           vel_center=tgt.velocity, vel_halfwidth=vel_hw,
                           coarse_points=points, refinement_levels=levels,
                           shrink_factor=shrink)


def _unique_waveforms(waveforms) -> list[tuple[int, WaveformModel]]:
    seen = {}
    for i, w in enumerate(waveforms):
        key = (w.kind, w.subcarrier, w.pulse_width, w.num_chirps)
        if key not in seen:
            seen[key] = (i, w)
    return list(seen.values())


def run(job: JobSpec) -> int:
    """Execute one batch job; returns the process exit status."""
    scenario, waveforms = load_job_inputs(job.scenario_path)
    out = Path(job.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    artifacts = []

    if job.command == "crlb":
        axis = job.sweep_axis or "senr"
        values = job.sweep_values or (10.0 * np.log10(scenario.radio.senr),)
        header, rows = _single_crlb_rows(scenario, waveforms, axis, values,
                                         job.target_index)
        _write_csv(out, header, rows)
        artifacts.append(str(out))
        if job.plot:
            artifacts.append(_plot_table(out, header, rows, {1, 2, 3, 4},
                                         **_axis_plot_opts(axis)))

    elif job.command == "crlb-multi":
        axis = job.sweep_axis
        if axis:
            header, rows = _multi_crlb_rows(scenario, waveforms, axis,
                                            job.sweep_values, job.target_index)
        else:
            header = ["target", "loc_crlb_m2", "vel_crlb_m2s2", "loc_decoupled_m2",
                      "vel_decoupled_m2s2", "loc_single_m2", "vel_single_m2s2",
                      "cond", "pinv"]
            rep = fim.crlb_multi(fim.multi_target_fim(scenario, waveforms))
            rows = [[q, t.loc_crlb, t.vel_crlb, t.loc_crlb_decoupled,
                     t.vel_crlb_decoupled, t.loc_crlb_single, t.vel_crlb_single,
                     rep.condition_number, int(rep.used_pseudo_inverse)]
                    for q, t in enumerate(rep.targets)]
        _write_csv(out, header, rows)
        artifacts.append(str(out))
        if job.plot and axis:
            artifacts.append(_plot_table(out, header, rows, {1, 2, 3, 4, 5, 6},
                                         **_axis_plot_opts(axis)))

    elif job.command == "mle":
        grid = _parse_grid_spec(job.grid_spec, scenario, waveforms, job.target_index)
        sig = signals.synthesize(scenario, waveforms, seed=job.seed)
        res = signals.mle_single(sig, scenario, waveforms, grid)
        truth = scenario.targets[job.target_index]
        header = ["est_x_m", "est_y_m", "est_vx_mps", "est_vy_mps",
                  "sq_err_loc_m2", "sq_err_vel_m2s2", "llf", "grid_evaluations",
                  "seed", "flags"]
        rows = [[res.est_location[0], res.est_location[1], res.est_velocity[0],
                 res.est_velocity[1],
                 float(np.sum((res.est_location - truth.location) ** 2)),
                 float(np.sum((res.est_velocity - truth.velocity) ** 2)),
                 res.llf_value, res.grid_evaluations, job.seed,
                 ";".join(res.flags) or "-"]]
        _write_csv(out, header, rows)
        artifacts.append(str(out))

    elif job.command == "mc":
        values = job.sweep_values or (-20.0, -10.0, 0.0, 10.0)
        grid = _parse_grid_spec(job.grid_spec, scenario, waveforms, job.target_index)
        rep = signals.monte_carlo(scenario, waveforms, grid, values, job.trials,
                                  seed=job.seed, target_index=job.target_index,
                                  workers=job.workers)
        header = ["senr_db", "mse_loc_m2", "mse_vel_m2s2", "crlb_loc_m2",
                  "crlb_vel_m2s2", "trials", "seed"]
        rows = [[r.senr_db, r.mse_location, r.mse_velocity, r.crlb_location,
                 r.crlb_velocity, r.trials, rep.seed] for r in rep.rows]
        _write_csv(out, header, rows)
        artifacts.append(str(out))
        if job.plot:
            artifacts.append(_plot_table(out, header, rows, {1, 2, 3, 4},
                                         xlabel="SENR [dB]"))

    elif job.command == "af":
        for i, w in _unique_waveforms(per_transmitter(waveforms, scenario.nodes.n_tx)):
            from .waveform import delay_resolution, doppler_resolution
            tau_r = delay_resolution(w)
            f_r = doppler_resolution(w)
            tau_grid = np.linspace(-2.5 * tau_r, 2.5 * tau_r, 101)
            f_grid = np.linspace(-2.5 * f_r, 2.5 * f_r, 101)
            af = ambiguity_map(w, tau_grid, f_grid)
            path = out.with_name(f"{out.stem}_tx{i}{out.suffix or '.csv'}")
            header = ["tau_s"] + [repr(float(f)) for f in f_grid]
            rows = [[float(t)] + [float(v) for v in af[j]]
                    for j, t in enumerate(tau_grid)]
            _write_csv(path, header, rows)
            artifacts.append(str(path))
            if job.plot:
                plot = svgplot.LinePlot(xlabel="offset / resolution", ylabel="|AF|^2",
                                        title=f"tx{i} {w.kind} cuts")
                plot.add("zero-Doppler cut", tau_grid / tau_r, af[:, 50])
                plot.add("zero-delay cut", f_grid / f_r, af[50, :])
                svg = str(path.with_suffix(".svg"))
                plot.write(svg)
                artifacts.append(svg)

    elif job.command == "safety":
        header = ["tx", "kind", "subcarrier", "num_chirps", "pulse_width_s",
                  "tau_r_s", "f_r_hz", "safety_distance_m", "safety_velocity_mps"]
        rows = []
        for i, w in _unique_waveforms(per_transmitter(waveforms, scenario.nodes.n_tx)):
            sm = fim.safety_metrics(w, scenario.radio.wavelength_m)
            rows.append([i, w.kind, w.subcarrier, w.num_chirps if w.num_chirps else 0,
                         w.pulse_width, sm.tau_r, sm.f_r, sm.safety_distance,
                         sm.safety_velocity])
        _write_csv(out, header, rows)
        artifacts.append(str(out))

    elif job.command == "sweep":
        if not job.sweep_axis:
            raise ScenarioValidationError("sweep command requires --sweep AXIS")
        if job.sweep_axis in ("separation_x", "rel_velocity"):
            header, rows = _multi_crlb_rows(scenario, waveforms, job.sweep_axis,
                                            job.sweep_values, job.target_index)
            logy = {1, 2, 3, 4, 5, 6}
        else:
            header, rows = _single_crlb_rows(scenario, waveforms, job.sweep_axis,
                                             job.sweep_values, job.target_index)
            logy = {1, 2, 3, 4}
        _write_csv(out, header, rows)
        artifacts.append(str(out))
        if job.plot:
            artifacts.append(_plot_table(out, header, rows, logy,
                                         **_axis_plot_opts(job.sweep_axis)))

    for a in artifacts:
        print(a)
    return EXIT_OK


def _axis_plot_opts(axis: str) -> dict:
    if axis == "fs":
        # kHz*dB convention in the plot label only; CSV keeps raw Hz
        return {"xlabel": "sampling rate [kHz*dB]", "logx": False,
                "x_transform": lambda fs_hz: 10.0 * np.log10(fs_hz / 1e3)}
    if axis == "senr":
        return {"xlabel": "SENR [dB]"}
    if axis == "T":
        return {"xlabel": "pulse width T [s]", "logx": True}
    if axis == "separation_x":
        return {"xlabel": "x separation [m]"}
    if axis == "rel_velocity":
        return {"xlabel": "relative velocity [m/s]"}
    if axis == "M":
        return {"xlabel": "chirp count M", "logx": True}
    return {}


# ---------------------------------------------------------------------------
# argv entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dmsense",
        description="CRLB / MLE batch jobs for distributed multistatic sensing")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=0, help="base RNG seed (u64)")
    p.add_argument("--plot", action="store_true", help="emit an SVG per table")
    p.add_argument("--sweep", choices=SWEEP_AXES, default=None, help="sweep axis")
    p.add_argument("--values", default=None,
                   help="comma-separated sweep values (dB for senr, SI otherwise)")
    p.add_argument("--trials", type=int, default=200, help="Monte Carlo trials per point")
    p.add_argument("--grid", default=None,
                   help="MLE grid spec LOC_HW:VEL_HW[:POINTS[:LEVELS[:SHRINK]]]")
    p.add_argument("--target", type=int, default=0, help="target index for reports")
    p.add_argument("--workers", type=int, default=1, help="parallel Monte Carlo workers")
    return p


def job_from_args(argv=None) -> JobSpec:
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    # allow "--values -20,-10,..." despite the leading dash
    for flag in ("--values", "--grid"):
        if flag in argv:
            i = argv.index(flag)
            if i + 1 < len(argv):
                argv[i:i + 2] = [f"{flag}={argv[i + 1]}"]
    args = build_parser().parse_args(argv)
    values = ()
    if args.values is not None:
        try:
            values = tuple(float(v) for v in args.values.split(",") if v.strip())
        except ValueError as exc:
            raise ScenarioValidationError(f"--values: {exc}") from exc
    return JobSpec(command=args.command, scenario_path=args.scenario,
                   output_path=args.out, sweep_axis=args.sweep, sweep_values=values,
                   plot=args.plot, seed=args.seed, trials=args.trials,
                   grid_spec=args.grid, target_index=args.target,
                   workers=args.workers)


def main(argv=None) -> int:
    try:
        job = job_from_args(argv)
        return run(job)
    except (ScenarioValidationError, DegenerateGeometryError, WaveformError,
            FileNotFoundError, ValueError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_VALIDATION
    except (fim.SingularInformationError, QuadratureError,
            np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": "numeric", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
