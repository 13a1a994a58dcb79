"""Run configuration: an INI-style ``key = value`` file checked against a schema.

Every key has a type and a default; unknown sections or keys are errors.
Overrides use dotted names, ``section.key=value``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

__all__ = ["ConfigError", "SCHEMA", "RunConfig", "load_config", "default_config_text"]


class ConfigError(ValueError):
    """Invalid configuration (unknown key, bad value)."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def _choice(*options):
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t

    parse.__name__ = "one of " + "|".join(options)
    return parse


# section -> key -> (parser, default text, description)
SCHEMA: dict[str, dict[str, tuple]] = {
    "material": {
        "a": (float, "1.0", "normal-material coupling a > 0"),
        "m": (float, "2.0", "conductivity ratio m > 0"),
    },
    "alpha": {
        "policy": (_choice("explicit", "at_alpha0", "offset"), "at_alpha0", "how alpha is chosen"),
        "value": (float, "0.7", "alpha for policy = explicit"),
        "offset": (float, "0.0", "alpha = alpha0 + offset for policy = offset"),
    },
    "geometry": {
        "kind": (_choice("concentric_discs", "ellipse_pair"), "concentric_discs", "planar geometry"),
        "r_inner": (float, "1.0", "disc: superconductor radius"),
        "r_outer": (float, "1.5", "disc: outer radius"),
        "inner_axes": (_floats, "1.0, 0.7", "ellipse: superconductor semi-axes"),
        "outer_axes": (_floats, "1.3, 1.0", "ellipse: outer semi-axes"),
    },
    "grid": {
        "lo": (float, "-12.0", "1D grid left end"),
        "hi": (float, "12.0", "1D grid right end"),
        "n": (int, "2400", "1D grid cells"),
        "extrapolate": (_bool, "true", "Richardson over (h, h/2) for 1D constants"),
        "points_per_unit": (float, "0", "planar FD resolution; 0 = automatic"),
        "radial_h_scaled": (float, "0.02", "Fourier path radial spacing times sqrt(B)"),
        "gl_nodes": (int, "128", "GL grid nodes across the bounding box"),
    },
    "scan": {
        "xi_lo": (float, "-2.0", "band scan start"),
        "xi_hi": (float, "6.0", "band scan end"),
        "xi_step": (float, "0.05", "band scan step"),
        "B_values": (_floats, "50, 100, 200", "disc-spectrum B values"),
        "B_lo": (float, "400", "B range start (expansion fit, monotonicity)"),
        "B_hi": (float, "2000", "B range end"),
        "B_count": (int, "41", "number of B samples"),
        "kappa_values": (_floats, "20, 30, 45", "kappa values for hc3"),
        "H_values": (_floats, "", "H grid for classify; empty = automatic"),
    },
    "gl": {
        "kappa": (float, "4.0", "GL parameter"),
        "H": (float, "5.0", "applied field"),
        "init": (_choice("normal_perturbed", "meissner"), "normal_perturbed", "initial state"),
        "max_iter": (int, "20000", "iteration cap"),
        "tol": (float, "0", "gradient tolerance; 0 = default 1e-8 * nodes * h^2"),
    },
    "tolerances": {
        "energy": (float, "1e-8", "nontrivial if energy < -energy"),
        "psi": (float, "1e-4", "nontrivial if ||psi||_2 > psi"),
    },
    "verify": {
        "criteria": (_ints, "1, 2, 3, 4, 5, 6, 7, 8, 9", "acceptance criteria run by verify-all"),
    },
    "run": {
        "seed": (int, "0", "random seed"),
        "threads": (int, "1", "worker threads (scans are sequential when 1)"),
        "out": (str, "out", "output directory"),
    },
}


def default_config_text() -> str:
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (_, default, desc) in keys.items():
            lines.append(f"# {desc}")
            lines.append(f"{key} = {default}")
        lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class RunConfig:
    values: dict
    text: str  # canonical text of the effective configuration (hashed in the manifest)

    def __getitem__(self, dotted: str):
        sec, key = dotted.split(".", 1)
        return self.values[sec][key]

    def section(self, name: str) -> dict:
        return dict(self.values[name])


def _parse(sec, key, raw):
    if sec not in SCHEMA:
        raise ConfigError(f"unknown section [{sec}]")
    if key not in SCHEMA[sec]:
        raise ConfigError(f"unknown key {sec}.{key}")
    parser = SCHEMA[sec][key][0]
    try:
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {sec}.{key}: {exc}") from None


def load_config(path: str | Path | None = None, overrides=()) -> RunConfig:
    """Defaults, then the file at ``path``, then ``section.key=value`` overrides."""
    raw = {sec: {k: entry[1] for k, entry in keys.items()} for sec, keys in SCHEMA.items()}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for sec in cp.sections():
            for key, val in cp.items(sec):
                _parse(sec, key, val)
                raw[sec][key] = val
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        name, val = item.split("=", 1)
        sec, key = name.strip().split(".", 1)
        _parse(sec, key, val)
        raw[sec][key] = val.strip()
    values = {sec: {k: _parse(sec, k, v) for k, v in keys.items()} for sec, keys in raw.items()}
    m = values["material"]
    if not (m["a"] > 0 and m["m"] > 0):
        raise ConfigError("material.a and material.m must be positive")
    text = "\n".join(f"{sec}.{k} = {raw[sec][k]}" for sec in sorted(raw) for k in sorted(raw[sec])) + "\n"
    return RunConfig(values, text)
