"""Strict line-oriented config files: [section] headers, key = value lines.

Unknown sections or keys are errors; values are typed by a per-section
schema.  Blank lines and #-comments are allowed.
"""

from .errors import ConfigurationError


def _as_bool(s):
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {s!r}")


def _as_float_list(s):
    return tuple(float(tok) for tok in s.split())


def _as_int_list(s):
    return tuple(int(tok) for tok in s.split())


# key -> (parser, default); sections absent from a file keep all defaults
SCHEMA = {
    "experiment": {
        "name": (str, "experiment"),
        "kind": (str, "percolation"),
    },
    "medium": {
        "kind": (str, "site_percolation"),
        "p": (float, 0.7),
        "p_ball": (float, 0.35),
        "radius": (float, 0.3),
        "intensity": (float, 0.3),
        "period": (float, 1.0),
        "units": (int, 16),
        "cells_per_unit": (int, 16),
        "periodic": (_as_bool, True),
    },
    "ensemble": {
        "seed0": (int, 1),
        "count": (int, 1),
    },
    "metric": {
        "delta": (float, 0.05),
        "eta": (float, 0.05),
        "mu": (float, 1.0),
        "method": (str, "fmm"),
        "directions": (int, 64),
        "t_grid": (_as_float_list, (8.0, 13.0, 18.0)),
        "units": (int, 40),
        "cells_per_unit": (int, 8),
        "count": (int, 12),
        "seed0": (int, 100),
        "check_delta0": (_as_bool, False),
    },
    "evolution": {
        "u0": (str, "bump"),
        "u0_width": (float, 0.15),
        "T": (float, 0.25),
        "cfl": (float, 0.45),
        "boundary": (str, "periodic"),
        "epsilons": (_as_float_list, (0.25, 0.125, 0.0625)),
        "delta": (float, 0.2),
        "snapshots": (int, 3),
    },
    "stationary": {
        "enabled": (_as_bool, False),
        "p_list": (str, "e1 e2 diag"),
        "tol": (float, 1e-8),
    },
    "output": {
        "grids": (_as_bool, False),
        "stride": (int, 1),
    },
}


def default_config():
    return {sec: {k: dv for k, (_, dv) in keys.items()}
            for sec, keys in SCHEMA.items()}


def parse_config(text):
    """Parse config text against the schema; raises on unknown keys."""
    cfg = default_config()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigurationError(
                    f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        if section is None:
            raise ConfigurationError(f"line {lineno}: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in SCHEMA[section]:
            raise ConfigurationError(
                f"line {lineno}: unknown key {key!r} in [{section}]")
        parser, _ = SCHEMA[section][key]
        try:
            cfg[section][key] = parser(value)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(
                f"line {lineno}: bad value for {key}: {exc}") from exc
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
