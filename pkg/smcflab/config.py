#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

"""Run configuration files.

A configuration is a YAML mapping with the sections ``grid``, ``init``,
``solver``, ``diagnostics`` and ``output``. Unknown sections and keys
are errors, and every error names the dotted path of the key.

"""

import dataclasses
import logging
import math
import os
import os.path

import yaml

from smcflab import diagnostics, dynamics, grid, integrator

LOG = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "SMCF_OUTPUT_DIR"

DEFAULT_SNAPSHOT_TEMPLATE = '{{ prefix }}_{{ "%010.4f"|format(t) }}.smcf'


class ConfigError(ValueError):
    "A configuration value is missing or outside its domain."


def get_config(filename):
    """Return the configuration data.

    :param filename: name of configuration file to read
    :type filename: str

    Read ``filename`` and parse it as a YAML file, then return the
    results.

    """
    filename = os.path.expanduser(filename)
    LOG.debug("loading config from %s", filename)
    with open(filename, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def _integer(value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError("an integer")
    return value


def _number(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("a number")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("a finite number")
    return value


def _positive(value):
    value = _number(value)
    if value <= 0:
        raise ValueError("a positive number")
    return value


def _non_negative(value):
    value = _number(value)
    if value < 0:
        raise ValueError("a number >= 0")
    return value


def _text(value):
    if not isinstance(value, str) or not value:
        raise ValueError("a non-empty string")
    return value


def _optional_text(value):
    if value is None or value == "":
        return None
    return _text(value)


def _sign(value):
    if value is None:
        return None
    if value not in (1, -1) or isinstance(value, bool):
        raise ValueError("1, -1 or null")
    return value


def _times(value):
    if value is None:
        return ()
    if not isinstance(value, (list, tuple)):
        raise ValueError("a list of times")
    return tuple(sorted(_non_negative(v) for v in value))


def _choice(table):
    def check(value):
        if value not in table:
            raise ValueError("one of " + ", ".join(sorted(table)))
        return value

    return check


_REQUIRED = object()


@dataclasses.dataclass(frozen=True)
class GridSection:
    d: int
    n: int
    length: float


@dataclasses.dataclass(frozen=True)
class InitSection:
    kind: str = "gaussian_packet"
    amplitude: float = 1e-2
    width: float = 1.0
    modulation: float = 0.0
    seed: int = 0


@dataclasses.dataclass(frozen=True)
class SolverSection:
    t_end: float
    mode: str = "exact_system"
    lam: float = 0.0
    compact_sign: int = None
    dt_init: float = 0.01
    dt_min: float = 1e-6
    dt_max: float = 0.05
    cfl_safety: float = 0.5
    blowup_grad_threshold: float = 1.0
    blowup_value_threshold: float = 1e3

    def rhs_mode(self):
        return dynamics.RhsMode(self.mode, lam=self.lam, sign=self.compact_sign)

    def step_control(self):
        return integrator.StepControl(
            dt_init=self.dt_init,
            cfl_safety=self.cfl_safety,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            blowup_grad_threshold=self.blowup_grad_threshold,
            blowup_value_threshold=self.blowup_value_threshold,
        )


@dataclasses.dataclass(frozen=True)
class DiagnosticsSection:
    sample_dt: float = 0.1
    snapshot_times: tuple = ()
    delta: float = 0.05


@dataclasses.dataclass(frozen=True)
class OutputSection:
    dir: str = "smcf-output"
    series_name: str = "series.csv"
    snapshot_prefix: str = "snapshot"
    snapshot_template: str = DEFAULT_SNAPSHOT_TEMPLATE


@dataclasses.dataclass(frozen=True)
class RunConfig:
    grid: GridSection
    init: InitSection
    solver: SolverSection
    diagnostics: DiagnosticsSection
    output: OutputSection

    def grid_spec(self):
        return grid.GridSpec(self.grid.d, self.grid.n, self.grid.length)

    def initial_state(self, spec=None):
        "Sample the configured initial data, on ``spec`` if given."
        if spec is None:
            spec = self.grid_spec()
        return dynamics.initial_data(
            spec,
            self.init.kind,
            self.init.amplitude,
            self.init.width,
            self.init.modulation,
            self.init.seed,
        )


# section -> (class, {yaml key: (attribute, check, default)})
SCHEMA = {
    "grid": (
        GridSection,
        {
            "d": ("d", _integer, _REQUIRED),
            "n": ("n", _integer, _REQUIRED),
            "length": ("length", _positive, _REQUIRED),
        },
    ),
    "init": (
        InitSection,
        {
            "kind": ("kind", _choice(dynamics.INITIAL_KINDS), "gaussian_packet"),
            "amplitude": ("amplitude", _non_negative, 1e-2),
            "width": ("width", _positive, 1.0),
            "modulation": ("modulation", _number, 0.0),
            "seed": ("seed", _integer, 0),
        },
    ),
    "solver": (
        SolverSection,
        {
            "t_end": ("t_end", _non_negative, _REQUIRED),
            "mode": ("mode", _choice(dynamics.RHS_MODES), "exact_system"),
            "lambda": ("lam", _non_negative, 0.0),
            "compact_sign": ("compact_sign", _sign, None),
            "dt_init": ("dt_init", _positive, 0.01),
            "dt_min": ("dt_min", _positive, 1e-6),
            "dt_max": ("dt_max", _positive, 0.05),
            "cfl_safety": ("cfl_safety", _positive, 0.5),
            "blowup_grad_threshold": ("blowup_grad_threshold", _positive, 1.0),
            "blowup_value_threshold": ("blowup_value_threshold", _positive, 1e3),
        },
    ),
    "diagnostics": (
        DiagnosticsSection,
        {
            "sample_dt": ("sample_dt", _positive, 0.1),
            "snapshot_times": ("snapshot_times", _times, ()),
            "delta": ("delta", _positive, 0.05),
        },
    ),
    "output": (
        OutputSection,
        {
            "dir": ("dir", _optional_text, "smcf-output"),
            "series_name": ("series_name", _text, "series.csv"),
            "snapshot_prefix": ("snapshot_prefix", _text, "snapshot"),
            "snapshot_template": (
                "snapshot_template",
                _text,
                DEFAULT_SNAPSHOT_TEMPLATE,
            ),
        },
    ),
}


def _build_section(name, data):
    cls, keys = SCHEMA[name]
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("{}: expected a mapping of keys".format(name))
    unknown = sorted(set(data) - set(keys))
    if unknown:
        raise ConfigError(
            "{}.{}: unknown key, expected one of {}".format(
                name, unknown[0], ", ".join(sorted(keys))
            )
        )
    values = {}
    for key, (attr, check, default) in keys.items():
        if key not in data:
            if default is _REQUIRED:
                raise ConfigError("{}.{}: required key is missing".format(name, key))
            values[attr] = default
            continue
        try:
            values[attr] = check(data[key])
        except ValueError as err:
            raise ConfigError(
                "{}.{}: expected {}, got {!r}".format(name, key, err, data[key])
            )
    return cls(**values)


def _wrap(path, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except ValueError as err:
        raise ConfigError("{}: {}".format(path, err))


def build_config(data, environ=None):
    """Validate parsed YAML data and return a RunConfig.

    :param data: parsed configuration
    :type data: dict
    :param environ: environment used for overrides, ``os.environ`` by default
    :type environ: dict

    """
    if environ is None:
        environ = os.environ
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping with a grid section")
    unknown = sorted(set(data) - set(SCHEMA))
    if unknown:
        raise ConfigError(
            "{}: unknown section, expected one of {}".format(
                unknown[0], ", ".join(sorted(SCHEMA))
            )
        )
    for required in ("grid", "solver"):
        if required not in data:
            raise ConfigError("{}: required section is missing".format(required))
    sections = {name: _build_section(name, data.get(name)) for name in SCHEMA}

    g = sections["grid"]
    try:
        grid.GridSpec(g.d, g.n, g.length)
    except ValueError as err:
        key = "d" if "dimension" in str(err) else "n" if "points" in str(err) else "length"
        raise ConfigError("grid.{}: {}".format(key, err))

    solver = sections["solver"]
    key = "lambda" if solver.lam else "mode"
    _wrap("solver." + key, solver.rhs_mode)
    try:
        solver.step_control()
    except ValueError as err:
        key = (
            "cfl_safety"
            if "cfl_safety" in str(err)
            else "blowup_grad_threshold"
            if "blow-up" in str(err)
            else "dt_init"
        )
        raise ConfigError("solver.{}: {}".format(key, err))

    diag = sections["diagnostics"]
    if g.d >= 2:
        _wrap("diagnostics.delta", diagnostics.parameter_plan, g.d, diag.delta)
    late = [t for t in diag.snapshot_times if t > solver.t_end]
    if late:
        raise ConfigError(
            "diagnostics.snapshot_times: expected times in [0, {}], got {!r}".format(
                solver.t_end, late[0]
            )
        )

    output = sections["output"]
    override = environ.get(OUTPUT_DIR_ENV)
    if override:
        LOG.debug("output directory %s from %s", override, OUTPUT_DIR_ENV)
        output = dataclasses.replace(output, dir=override)
        sections["output"] = output

    return RunConfig(**sections)


def parse_config(path, environ=None):
    "Read and validate the configuration file at ``path``."
    return build_config(get_config(path), environ=environ)
