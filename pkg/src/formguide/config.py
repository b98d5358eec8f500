"""Scenario-file ingestion: TOML in, value-identical round trip out.

A scenario file holds the sections [chief], [deputies], [guidance], [mpc],
[noise] and [run]; every guidance parameter defaults to the nominal
comparison values, so an empty [guidance] table reproduces them exactly.
Angles in the file are degrees; everything internal is radians and meters.
"""
from __future__ import annotations

import math
import sys
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .astro import QnsElements
from .control import MpcConfig
from .guidance import GuidanceConfig
from .sim import NoiseModel, ScenarioSpec, builtin_scenario


class ConfigError(ValueError):
    pass


GUIDANCE_DEFAULTS = {
    "tf_arc": 0.2,  # orbits
    "tn_arc": 100.0,  # s
    "u_max": 35e-6,  # m/s^2
    "u_min": 20e-6,
    "r_ca": 100.0,  # m
    "p": 1.0,
    "q_umin": 1e-2,
    "q_ca": 1.0,
    "beta_max": 10.0,
    "upsilon_max": math.inf,
    "q_weight": [1.0] * 6,
    "r_weight": [1.0] * 3,
    "eps": 1.0,
    "max_iter": 10,
    "ca_margin": 0.0,
}


def _chief_from_table(tab: dict) -> QnsElements:
    try:
        return QnsElements(
            a=float(tab["a_km"]) * 1e3,
            theta=math.radians(float(tab.get("theta_deg", 0.0))),
            ex=float(tab.get("ex", 0.0)),
            ey=float(tab.get("ey", 0.0)),
            inc=math.radians(float(tab["inc_deg"])),
            raan=math.radians(float(tab.get("raan_deg", 0.0))),
            flavor="osculating",
        )
    except KeyError as exc:
        raise ConfigError(f"[chief] missing key {exc}") from exc


def _guidance_from_table(tab: dict) -> tuple[GuidanceConfig, float, float]:
    merged = dict(GUIDANCE_DEFAULTS)
    unknown = set(tab) - set(merged)
    if unknown:
        raise ConfigError(f"[guidance] unknown keys: {sorted(unknown)}")
    merged.update(tab)
    cfg = GuidanceConfig(
        u_min=float(merged["u_min"]),
        u_max=float(merged["u_max"]),
        r_ca=float(merged["r_ca"]),
        ca_margin=float(merged["ca_margin"]),
        p=float(merged["p"]),
        q_weight=np.asarray(merged["q_weight"], dtype=float),
        r_weight=np.asarray(merged["r_weight"], dtype=float),
        q_umin=float(merged["q_umin"]),
        q_ca=float(merged["q_ca"]),
        upsilon_max=float(merged["upsilon_max"]),
        beta_max=float(merged["beta_max"]),
        eps=float(merged["eps"]),
        max_iter=int(merged["max_iter"]),
    )
    return cfg, float(merged["tf_arc"]), float(merged["tn_arc"])


def _mpc_from_table(tab: dict) -> MpcConfig:
    return MpcConfig(
        mode=str(tab.get("mode", "SHMPC")).upper(),
        horizon_steps=int(tab.get("horizon_steps", 21)),
        sampling_dt=float(tab.get("sampling_dt", 50.0)),
        alpha=float(tab.get("alpha", 0.4)),
    )


def noise_from_table(tab: dict) -> NoiseModel:
    return NoiseModel(
        abs_nav_sigma=np.asarray(
            tab.get("abs_nav_sigma", (1.5 * np.ones(6)).tolist()), dtype=float
        ),
        rel_nav_sigma=np.asarray(
            tab.get("rel_nav_sigma", (0.05 * np.ones(6)).tolist()), dtype=float
        ),
        pointing_sigma=math.radians(float(tab.get("pointing_sigma_deg", 1.0))),
        seed=int(tab.get("seed", 0)),
    )


def scenario_from_dict(doc: dict[str, Any]) -> tuple[ScenarioSpec, NoiseModel, dict]:
    """Build a scenario from a parsed document; returns (spec, noise, run)."""
    run_tab = doc.get("run", {})
    builtin = run_tab.get("builtin") or doc.get("builtin")
    guidance, tf_arc, tn_arc = _guidance_from_table(doc.get("guidance", {}))
    mpc = _mpc_from_table(doc.get("mpc", {}))
    noise = noise_from_table(doc.get("noise", {}))

    if builtin:
        spec = builtin_scenario(str(builtin))
        spec = spec.with_overrides(
            tf_arc=tf_arc, tn_arc=tn_arc, guidance=guidance, mpc=mpc
        )
        if "duration_orbits" in run_tab:
            spec = spec.with_overrides(
                duration_orbits=float(run_tab["duration_orbits"])
            )
        return spec, noise, run_tab

    if "chief" not in doc or "deputies" not in doc:
        raise ConfigError("scenario needs [chief] and [[deputies]] (or a builtin)")
    chief = _chief_from_table(doc["chief"])
    deputies = doc["deputies"]
    if not isinstance(deputies, list) or not deputies:
        raise ConfigError("[[deputies]] must be a non-empty array of tables")
    y0, yf = [], []
    for idx, d in enumerate(deputies):
        try:
            y0.append([float(v) for v in d["y0"]])
            yf.append([float(v) for v in d["yf"]])
        except KeyError as exc:
            raise ConfigError(f"deputy {idx} missing {exc}") from exc
        if len(y0[-1]) != 6 or len(yf[-1]) != 6:
            raise ConfigError(f"deputy {idx} states must have 6 components")
    spec = ScenarioSpec(
        name=str(run_tab.get("name", "custom")),
        chief_osc=chief,
        y0=np.array(y0),
        yf=np.array(yf),
        duration_orbits=float(run_tab.get("duration_orbits", 5.0)),
        tf_arc=tf_arc,
        tn_arc=tn_arc,
        guidance=guidance,
        mpc=mpc,
    )
    return spec, noise, run_tab


def load_scenario(path: str) -> tuple[ScenarioSpec, NoiseModel, dict]:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed scenario file {path}: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(spec: ScenarioSpec, noise: NoiseModel | None = None) -> dict:
    """Serialize a spec so that scenario_from_dict reproduces it exactly."""
    doc: dict[str, Any] = {
        "chief": {
            "a_km": spec.chief_osc.a / 1e3,
            "theta_deg": math.degrees(spec.chief_osc.theta),
            "ex": spec.chief_osc.ex,
            "ey": spec.chief_osc.ey,
            "inc_deg": math.degrees(spec.chief_osc.inc),
            "raan_deg": math.degrees(spec.chief_osc.raan),
        },
        "deputies": [
            {"y0": spec.y0[i].tolist(), "yf": spec.yf[i].tolist()}
            for i in range(spec.n_deputies)
        ],
        "guidance": {
            "tf_arc": spec.tf_arc,
            "tn_arc": spec.tn_arc,
            "u_min": spec.guidance.u_min,
            "u_max": spec.guidance.u_max,
            "r_ca": spec.guidance.r_ca,
            "ca_margin": spec.guidance.ca_margin,
            "p": spec.guidance.p,
            "q_weight": spec.guidance.q_weight.tolist(),
            "r_weight": spec.guidance.r_weight.tolist(),
            "q_umin": spec.guidance.q_umin,
            "q_ca": spec.guidance.q_ca,
            "upsilon_max": spec.guidance.upsilon_max,
            "beta_max": spec.guidance.beta_max,
            "eps": spec.guidance.eps,
            "max_iter": spec.guidance.max_iter,
        },
        "mpc": {
            "mode": spec.mpc.mode,
            "horizon_steps": spec.mpc.horizon_steps,
            "sampling_dt": spec.mpc.sampling_dt,
            "alpha": spec.mpc.alpha,
        },
        "run": {"name": spec.name, "duration_orbits": spec.duration_orbits},
    }
    if noise is not None:
        doc["noise"] = {
            "abs_nav_sigma": noise.abs_nav_sigma.tolist(),
            "rel_nav_sigma": noise.rel_nav_sigma.tolist(),
            "pointing_sigma_deg": math.degrees(noise.pointing_sigma),
            "seed": noise.seed,
        }
    return doc


def dump_toml(doc: dict, path: str) -> None:
    """Minimal TOML writer for the scenario schema (scalars, lists, tables)."""

    def fmt(v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return repr(v)
        if isinstance(v, str):
            return '"' + v.replace('"', '\\"') + '"'
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        raise TypeError(f"cannot serialize {type(v)}")

    lines: list[str] = []
    for key, val in doc.items():
        if isinstance(val, dict):
            lines.append(f"[{key}]")
            for k, v in val.items():
                lines.append(f"{k} = {fmt(v)}")
            lines.append("")
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            for item in val:
                lines.append(f"[[{key}]]")
                for k, v in item.items():
                    lines.append(f"{k} = {fmt(v)}")
                lines.append("")
        else:
            lines.insert(0, f"{key} = {fmt(val)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
