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

import unittest
import unittest.mock as mock

import yaml

from smcflab import config, dynamics, grid
from smcflab.tests import base

MINIMAL = """\
grid:
  d: 2
  n: 64
  length: 40.0
solver:
  t_end: 1.0
"""


class BaseConfigTest(unittest.TestCase):
    def setUp(self):
        m = self._get_mock_open(base.CONFIG)
        with mock.patch("smcflab.config.open", m):
            self.cfg = config.parse_config("dummy", environ={})

    def _get_mock_open(self, data):
        return mock.mock_open(read_data=data)

    def _parse(self, text, environ=None):
        m = self._get_mock_open(text)
        with mock.patch("smcflab.config.open", m):
            return config.parse_config("dummy", environ=environ or {})

    def assertConfigError(self, data, path):
        with self.assertRaises(config.ConfigError) as cm:
            config.build_config(data, environ={})
        self.assertTrue(
            str(cm.exception).startswith(path + ":"),
            "{!r} does not name {}".format(str(cm.exception), path),
        )


class TestGetConfig(BaseConfigTest):
    def test_get_config_empty(self):
        m = self._get_mock_open("")
        with mock.patch("smcflab.config.open", m):
            self.assertEqual(config.get_config("dummy"), None)
            m.assert_called_once_with("dummy", "r", encoding="utf-8")

    def test_empty_file_is_an_error(self):
        self.assertRaises(config.ConfigError, self._parse, "")

    def test_parsed(self):
        self.assertEqual(grid.GridSpec(2, 32, 24.0), self.cfg.grid_spec())
        self.assertEqual("sine_bump", self.cfg.init.kind)
        self.assertEqual(0.05, self.cfg.init.amplitude)
        self.assertEqual(0.2, self.cfg.solver.t_end)
        self.assertIsNone(self.cfg.output.dir)

    def test_initial_state(self):
        field = self.cfg.initial_state()
        expected = dynamics.initial_data(
            grid.GridSpec(2, 32, 24.0), "sine_bump", 0.05, 1.5
        )
        self.assertEqual(expected.values.tobytes(), field.values.tobytes())
        coarse = self.cfg.initial_state(grid.GridSpec(2, 16, 24.0))
        self.assertEqual((16, 16), coarse.values.shape)


class TestDefaults(BaseConfigTest):
    def setUp(self):
        super().setUp()
        self.minimal = self._parse(MINIMAL)

    def test_init(self):
        init = self.minimal.init
        self.assertEqual("gaussian_packet", init.kind)
        self.assertEqual(1e-2, init.amplitude)
        self.assertEqual(1.0, init.width)
        self.assertEqual(0.0, init.modulation)
        self.assertEqual(0, init.seed)

    def test_solver(self):
        solver = self.minimal.solver
        self.assertEqual("exact_system", solver.mode)
        self.assertEqual(0.0, solver.lam)
        self.assertIsNone(solver.compact_sign)
        self.assertEqual(0.01, solver.dt_init)
        self.assertEqual(1e-6, solver.dt_min)
        self.assertEqual(0.05, solver.dt_max)
        self.assertEqual(0.5, solver.cfl_safety)
        self.assertEqual(1.0, solver.blowup_grad_threshold)
        self.assertEqual(1e3, solver.blowup_value_threshold)
        self.assertEqual(dynamics.RhsMode(), solver.rhs_mode())

    def test_diagnostics(self):
        diag = self.minimal.diagnostics
        self.assertEqual(0.1, diag.sample_dt)
        self.assertEqual((), diag.snapshot_times)
        self.assertEqual(0.05, diag.delta)

    def test_output(self):
        out = self.minimal.output
        self.assertEqual("smcf-output", out.dir)
        self.assertEqual("series.csv", out.series_name)
        self.assertEqual("snapshot", out.snapshot_prefix)
        self.assertEqual(config.DEFAULT_SNAPSHOT_TEMPLATE, out.snapshot_template)

    def test_environment_override(self):
        cfg = self._parse(MINIMAL, environ={config.OUTPUT_DIR_ENV: "/tmp/elsewhere"})
        self.assertEqual("/tmp/elsewhere", cfg.output.dir)

    def test_empty_override_is_ignored(self):
        cfg = self._parse(MINIMAL, environ={config.OUTPUT_DIR_ENV: ""})
        self.assertEqual("smcf-output", cfg.output.dir)


class TestValidation(BaseConfigTest):
    def setUp(self):
        super().setUp()
        self.data = yaml.safe_load(MINIMAL)

    def _with(self, section, **values):
        self.data.setdefault(section, {}).update(values)
        return self.data

    def test_not_a_mapping(self):
        self.assertRaises(config.ConfigError, config.build_config, ["grid"], {})

    def test_missing_section(self):
        del self.data["solver"]
        self.assertConfigError(self.data, "solver")

    def test_unknown_section(self):
        self.data["plots"] = {}
        self.assertConfigError(self.data, "plots")

    def test_section_not_a_mapping(self):
        self.data["init"] = [1, 2]
        self.assertConfigError(self.data, "init")

    def test_missing_key(self):
        del self.data["grid"]["length"]
        self.assertConfigError(self.data, "grid.length")

    def test_unknown_key(self):
        self.assertConfigError(self._with("solver", dt=0.1), "solver.dt")

    def test_points_per_axis(self):
        self.assertConfigError(self._with("grid", n=48), "grid.n")

    def test_dimension(self):
        self.assertConfigError(self._with("grid", d=4), "grid.d")

    def test_length(self):
        self.assertConfigError(self._with("grid", length=-1.0), "grid.length")

    def test_integer_types(self):
        self.assertConfigError(self._with("grid", n=64.0), "grid.n")
        self.data = yaml.safe_load(MINIMAL)
        self.assertConfigError(self._with("grid", d=True), "grid.d")
        self.data = yaml.safe_load(MINIMAL)
        self.assertConfigError(self._with("init", seed="one"), "init.seed")

    def test_number_types(self):
        self.assertConfigError(self._with("init", amplitude=True), "init.amplitude")
        self.data = yaml.safe_load(MINIMAL)
        self.assertConfigError(self._with("solver", t_end=".inf"), "solver.t_end")
        self.data = yaml.safe_load(MINIMAL)
        self.assertConfigError(
            self._with("solver", t_end=float("inf")), "solver.t_end"
        )

    def test_negative_end_time(self):
        self.assertConfigError(self._with("solver", t_end=-1.0), "solver.t_end")

    def test_unknown_initial_kind(self):
        self.assertConfigError(self._with("init", kind="square"), "init.kind")

    def test_unknown_mode(self):
        self.assertConfigError(self._with("solver", mode="heat"), "solver.mode")

    def test_lambda_only_for_regularized(self):
        self.assertConfigError(
            self._with("solver", mode="exact_system", **{"lambda": 0.5}), "solver.lambda"
        )

    def test_regularized(self):
        cfg = config.build_config(
            self._with("solver", mode="regularized", **{"lambda": 0.5}), environ={}
        )
        self.assertEqual(0.5, cfg.solver.lam)
        self.assertEqual(dynamics.RhsMode("regularized", lam=0.5), cfg.solver.rhs_mode())

    def test_lambda_range(self):
        self.assertConfigError(
            self._with("solver", mode="regularized", **{"lambda": 2.0}), "solver.lambda"
        )

    def test_compact_sign(self):
        self.assertConfigError(self._with("solver", compact_sign=0), "solver.compact_sign")
        self.data = yaml.safe_load(MINIMAL)
        self.assertConfigError(
            self._with("solver", compact_sign=True), "solver.compact_sign"
        )
        self.data = yaml.safe_load(MINIMAL)
        cfg = config.build_config(
            self._with("solver", mode="compact_coefficient", compact_sign=-1),
            environ={},
        )
        self.assertEqual(-1, cfg.solver.rhs_mode().sign)

    def test_step_bounds(self):
        self.assertConfigError(
            self._with("solver", dt_min=0.1, dt_max=0.05), "solver.dt_init"
        )

    def test_cfl_safety(self):
        self.assertConfigError(self._with("solver", cfl_safety=2.0), "solver.cfl_safety")

    def test_delta(self):
        self.assertConfigError(self._with("diagnostics", delta=0.5), "diagnostics.delta")

    def test_delta_ignored_on_a_line(self):
        self._with("grid", d=1)
        cfg = config.build_config(self._with("diagnostics", delta=0.5), environ={})
        self.assertEqual(0.5, cfg.diagnostics.delta)

    def test_snapshot_times(self):
        cfg = config.build_config(
            self._with("diagnostics", snapshot_times=[1.0, 0.5]), environ={}
        )
        self.assertEqual((0.5, 1.0), cfg.diagnostics.snapshot_times)

    def test_late_snapshot(self):
        self.assertConfigError(
            self._with("diagnostics", snapshot_times=[0.5, 2.0]),
            "diagnostics.snapshot_times",
        )

    def test_snapshot_times_not_a_list(self):
        self.assertConfigError(
            self._with("diagnostics", snapshot_times=0.5),
            "diagnostics.snapshot_times",
        )

    def test_empty_series_name(self):
        self.assertConfigError(self._with("output", series_name=""), "output.series_name")
