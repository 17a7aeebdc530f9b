"""Run loop and result emission: gauge CSVs, bed snapshots, run manifest.

Outputs are plain CSV with 17-significant-digit decimals so binary floating
point round-trips losslessly for regression diffs; a JSON manifest records
the resolved configuration and conservation audit totals.  Identical
configurations produce byte-identical outputs on the same build.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ScenarioConfig
from .dg import DgField, integrate
from .errors import SolverError
from .morpho import GrassLaw
from .scenarios import (GaugeRecord, SolitonParams, build_case, make_gauges,
                        record_gauges, soliton_state, error_norms)
from .stepper import MODELS, StepControls, Stepper, stable_dt

_FMT = "{:.17g}"


@dataclass(eq=False)
class RunResult:
    """In-memory results of one simulation."""

    config: ScenarioConfig
    gauges: list[GaugeRecord]
    q: DgField
    b: DgField
    b_initial: DgField
    manifest: dict
    stepper: Stepper


def controls_from_config(config: ScenarioConfig) -> StepControls:
    return StepControls(
        model=config.model,
        dt=config.dt,
        cfl=config.cfl,
        h0_min=config.effective_h0_min,
        breaking_threshold=config.breaking_threshold,
        breaking_relax_steps=config.breaking_relax_steps,
        limiter_M=config.limiter_M,
        bed_limiter_M=config.bed_limiter_M,
        tau_hdg=config.tau_hdg,
        bed_update_every=config.bed_update_every,
        dispersive_min_depth=config.dispersive_min_depth,
    )


def run(config: ScenarioConfig, quiet: bool = True) -> RunResult:
    """Execute a configured simulation; write artifacts when out_dir is set.

    Multi-wave runs reset the hydrodynamic state (and all transient solver
    state) before each wave while carrying the evolved bed forward.
    """
    case = build_case(config)
    params = case.physics
    law = GrassLaw(A=config.law_A, m=config.law_m)
    controls = controls_from_config(config)
    stepper = Stepper(params, controls, law)

    b = case.b0.copy()
    b_initial = case.b0.copy()
    q = case.q0.copy()
    gauges = make_gauges(case.mesh, config.gauges)

    mass_water_0 = float(integrate(q)[0])
    mass_bed_0 = float(integrate(b)[0])

    wave_log = []
    t_global = 0.0
    for wave in range(config.waves):
        if wave > 0:
            q = case.q0.copy()
            stepper.reset_transients()
        t = 0.0
        step = 0
        if wave == 0:
            record_gauges(q, b, gauges, 0.0, params.H0)
        while t < config.end_time - 1e-12:
            if config.dt is not None:
                dt = min(config.dt, config.end_time - t)
            else:
                dt = min(stable_dt(q, config.cfl, params.g, stepper.wet_mask),
                         config.end_time - t)
            q, b = stepper.strang_step(q, b, t, dt)
            if not np.all(np.isfinite(q.coeffs)):
                raise SolverError(f"non-finite state at t={t + dt:.6f} (wave {wave + 1})")
            t += dt
            step += 1
            if step % config.output_every == 0 or t >= config.end_time - 1e-12:
                record_gauges(q, b, gauges, t_global + t, params.H0)
            if not quiet and step % max(1, int(1.0 / max(dt, 1e-12))) == 0:
                print(f"wave {wave + 1}/{config.waves}  t = {t:9.3f} s")
        t_global += t
        wave_log.append({
            "wave": wave + 1,
            "steps": step,
            "end_time": t,
            "water_mass": float(integrate(q)[0]),
            "bed_mass": float(integrate(b)[0]),
        })

    manifest = {
        "config": _jsonable(asdict(config)),
        "initial_water_mass": mass_water_0,
        "final_water_mass": float(integrate(q)[0]),
        "initial_bed_mass": mass_bed_0,
        "final_bed_mass": float(integrate(b)[0]),
        "clip_mass_total": stepper.clip_mass_total,
        "steps_total": stepper.step_count,
        "waves": wave_log,
        "breaking_first": (None if stepper.breaking_first is None else
                           {"t": stepper.breaking_first[0], "x": stepper.breaking_first[1]}),
        "complete": True,
    }

    if config.scenario == "soliton_flat":
        sol = SolitonParams(H0=config.H0, a0=config.a0, x0=config.x0, g=config.g)

        def zeta_ref(x, t):
            h, _ = soliton_state(sol, x, t)
            return h - config.H0

        zeta = DgField(q.coeffs[:, 0:1, :] + b.coeffs, q.disc)
        zeta.coeffs[:, 0, 0] -= config.H0
        l2_abs, linf = error_norms(zeta, zeta_ref, config.end_time)
        l2_ref, _ = error_norms(DgField.zeros(q.disc, 1), zeta_ref, config.end_time)
        manifest["surface_error"] = {"l2": l2_abs, "linf": linf,
                                     "l2_relative": l2_abs / l2_ref if l2_ref else 0.0}

    result = RunResult(config=config, gauges=gauges, q=q, b=b,
                       b_initial=b_initial, manifest=manifest, stepper=stepper)
    if config.out_dir is not None:
        write_outputs(result)
    return result


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def write_outputs(result: RunResult):
    """Emit gauge_<k>.csv, bed_<step>.csv, and manifest.json to out_dir."""
    out_dir = result.config.out_dir
    os.makedirs(out_dir, exist_ok=True)

    for k, gauge in enumerate(result.gauges):
        path = os.path.join(out_dir, f"gauge_{k}.csv")
        with open(path, "w") as fh:
            fh.write("t,zeta,h,u,b\n")
            for row in zip(gauge.times, gauge.zeta, gauge.h, gauge.u, gauge.b):
                fh.write(",".join(_FMT.format(v) for v in row) + "\n")

    step = result.stepper.step_count
    path = os.path.join(out_dir, f"bed_{step}.csv")
    centers = result.b.disc.mesh.centers
    b_now = result.b.coeffs[:, 0, 0]
    b_then = result.b_initial.coeffs[:, 0, 0]
    with open(path, "w") as fh:
        fh.write("x,b,delta_b\n")
        for x, bv, b0v in zip(centers, b_now, b_then):
            fh.write(",".join(_FMT.format(v) for v in (x, bv, bv - b0v)) + "\n")

    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(result.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
