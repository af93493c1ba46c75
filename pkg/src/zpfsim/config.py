"""Flat key=value run configuration: parsing, schemas, validation.

One experiment per file.  Lines look like `key = value`; `#` starts a
comment; keys are experiment-specific and unknown keys are rejected with
the offending line number.  The same `key=value` syntax is accepted by
the CLI `--set` flag, which overrides file values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError
from .potentials import PotentialSpec
from .units import UnitSystem

EXPERIMENTS = (
    "sample-field",
    "run-sed",
    "evolve-wigner",
    "hbar-scaling",
    "check-lorentz",
    "compare",
)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


_PARSERS = {
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "str": str.strip,
    "floats": _parse_floats,
}

# key -> (type name, default); None default means required
_COMMON = {
    "experiment": ("str", None),
    "seed": ("int", 0),
    "out_dir": ("str", ""),
    "workers": ("int", 0),  # 0: take ZPF_WORKERS or 1
    "hbar": ("float", 1.0),
    "mass": ("float", 1.0),
    "omega0": ("float", 1.0),
    "gamma": ("float", 1.0e-2),
}

_BAND = {
    "omega_min": ("float", 0.2),
    "omega_max": ("float", 5.0),
    "n_modes": ("int", 256),
    "strategy": ("str", "stratified-jitter"),
}

_GRID = {
    "x_min": ("float", -4.0),
    "x_max": ("float", 4.0),
    "p_min": ("float", -4.0),
    "p_max": ("float", 4.0),
    "n_x": ("int", 128),
    "n_p": ("int", 128),
}

SCHEMAS: dict[str, dict] = {
    "sample-field": {
        **_COMMON,
        **_BAND,
        "duration": ("float", 2000.0),
        "dt": ("float", 0.05),
        "write_field": ("bool", False),
    },
    "run-sed": {
        **_COMMON,
        **_BAND,
        "potential": ("floats", (0.0, 0.0, 0.5)),
        "dt": ("float", 0.02),
        "t_end": ("float", 1000.0),
        "t_burn": ("float", 500.0),
        "n_trajectories": ("int", 500),
        "rr_model": ("str", "order-reduced"),
        "x0": ("float", 0.0),
        "p0": ("float", 0.0),
        "init_sampler": ("str", "fixed"),
        "stride": ("int", 10),
        "n_record": ("int", 0),
    },
    "evolve-wigner": {
        **_COMMON,
        **_GRID,
        "potential": ("floats", (0.0, 0.0, 0.5)),
        "order": ("int", 0),
        "dt": ("float", 0.0),  # 0: auto from the stability bound
        "t_final": ("float", 1.0),
        "mean_x": ("float", 1.0),
        "mean_p": ("float", 0.0),
        "sigma_x": ("float", 0.45),
        "sigma_p": ("float", 0.45),
        "initial_grid": ("str", ""),
        "write_binary": ("bool", False),
    },
    "hbar-scaling": {
        **_COMMON,
        **_GRID,
        # anharmonic forces sling the x tail to large momenta; the box must
        # hold that motion, so the momentum span is taller than the grid default
        "p_min": ("float", -6.0),
        "p_max": ("float", 6.0),
        "potential": ("floats", (0.0, 0.0, 0.0, 0.0, 0.25)),
        "hbar_values": ("floats", (0.05, 0.1, 0.2, 0.4)),
        "t_final": ("float", 1.0),
        "mean_x": ("float", 1.0),
        "mean_p": ("float", 0.0),
        # sigma_p sets the perturbative scale of the first correction term:
        # shrinking it toward hbar_max bends the scaling below quadratic
        "sigma_x": ("float", 0.4),
        "sigma_p": ("float", 0.8),
        "dt": ("float", 0.0),
    },
    "check-lorentz": {
        **_COMMON,
        "spectral_exponent": ("float", 3.0),
        "beta": ("float", 0.3),
        "n_samples": ("int", 1000000),
        "omega_min": ("float", 0.5),
        "omega_max": ("float", 5.0),
        "n_bins": ("int", 24),
    },
    "compare": {
        **_COMMON,
        **_BAND,
        "potential": ("floats", (0.0, 0.0, 0.5)),
        "dt": ("float", 0.02),
        "t_end": ("float", 1000.0),
        "t_burn": ("float", 500.0),
        "n_trajectories": ("int", 500),
        "rr_model": ("str", "order-reduced"),
        "x0": ("float", 0.0),
        "p0": ("float", 0.0),
        "init_sampler": ("str", "fixed"),
        "stride": ("int", 10),
        "tolerance": ("float", 0.10),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """A validated experiment configuration (values already typed)."""

    experiment: str
    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def unit_system(self) -> UnitSystem:
        v = self.values
        return UnitSystem(
            hbar=v["hbar"], mass=v["mass"], omega0=v["omega0"], gamma=v["gamma"]
        )

    def potential(self) -> PotentialSpec:
        return PotentialSpec(tuple(self.values["potential"]))


def parse_assignment(line: str, where: str):
    """Split one `key = value` line; raises with the location on failure."""
    if "=" not in line:
        raise ConfigurationError(f"{where}: expected 'key = value', got {line!r}")
    key, _, raw = line.partition("=")
    key = key.strip()
    if not key:
        raise ConfigurationError(f"{where}: empty key in {line!r}")
    return key, raw.strip()


def _convert(key: str, raw: str, type_name: str, where: str):
    try:
        return _PARSERS[type_name](raw)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(
            f"{where}: value for key '{key}' is not a valid {type_name}: {raw!r}"
        ) from exc


def parse_config(path: str | None, overrides=(), experiment: str | None = None) -> RunConfig:
    """Load `key = value` lines, apply overrides, validate against the schema.

    `overrides` is a sequence of `key=value` strings (from --set flags or
    dedicated flags); they win over file contents.  The experiment comes
    from the file's `experiment` key unless forced by the caller (the CLI
    subcommand name).
    """
    raw_items: list[tuple[str, str, str]] = []
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            where = f"{path}:{lineno}"
            key, raw = parse_assignment(stripped, where)
            raw_items.append((key, raw, where))
    for k, item in enumerate(overrides, start=1):
        key, raw = parse_assignment(item, f"override #{k}")
        raw_items.append((key, raw, f"override #{k}"))

    kind = experiment
    for key, raw, where in raw_items:
        if key == "experiment":
            file_kind = raw
            if file_kind not in EXPERIMENTS:
                raise ConfigurationError(
                    f"{where}: unknown experiment {file_kind!r}; "
                    f"choose one of {', '.join(EXPERIMENTS)}"
                )
            if kind is None:
                kind = file_kind
            elif kind != file_kind:
                raise ConfigurationError(
                    f"{where}: config is for experiment '{file_kind}' but the "
                    f"'{kind}' subcommand was invoked"
                )
    if kind is None:
        raise ConfigurationError(
            "no experiment selected: pass a subcommand or set 'experiment = ...'"
        )
    schema = SCHEMAS[kind]
    values = {key: default for key, (_, default) in schema.items() if default is not None}
    values["experiment"] = kind
    for key, raw, where in raw_items:
        if key == "experiment":
            continue
        if key not in schema:
            raise ConfigurationError(
                f"{where}: unknown key '{key}' for experiment '{kind}'"
            )
        values[key] = _convert(key, raw, schema[key][0], where)
    missing = [k for k in schema if k not in values]
    if missing:
        raise ConfigurationError(
            f"missing required config keys for '{kind}': {', '.join(sorted(missing))}"
        )
    cfg = RunConfig(kind, values)
    # eagerly construct the validated domain objects so bad values are
    # reported before any compute starts
    cfg.unit_system()
    if "potential" in values:
        cfg.potential()
    return cfg
