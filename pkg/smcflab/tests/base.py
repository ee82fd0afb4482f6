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

import math
import unittest

import numpy as np

from smcflab import dynamics, grid

TWO_PI = 2.0 * math.pi

CONFIG = """\
grid:
  d: 2
  n: 32
  length: 24.0
init:
  kind: sine_bump
  amplitude: 0.05
  width: 1.5
solver:
  t_end: 0.2
  mode: exact_system
diagnostics:
  sample_dt: 0.1
output:
  dir: null
"""


def periodic(d=2, n=32):
    "Grid on [-pi, pi)^d, where every integer wave number is resolved."
    return grid.GridSpec(d, n, TWO_PI)


def from_function(spec, func):
    return grid.Field(spec, func(*spec.coordinates))


def bump(n=32, d=2, amplitude=0.1, length=24.0, width=1.5):
    spec = grid.GridSpec(d, n, length)
    return dynamics.initial_data(spec, "sine_bump", amplitude, width)


def random_state(seed=0, amplitude=0.1, d=2, n=32):
    spec = periodic(d, n)
    return dynamics.initial_data(spec, "random_smooth", amplitude, 1.0, seed=seed)


class TestCase(unittest.TestCase):
    def useFixture(self, f):
        f.setUp()
        self.addCleanup(f.cleanUp)
        return f

    def assertArrayClose(self, actual, expected, atol=1e-12, rtol=0.0):
        actual = np.asarray(actual)
        expected = np.asarray(expected)
        self.assertEqual(
            np.broadcast(actual, expected).shape, np.asarray(actual).shape
        )
        error = float(np.max(np.abs(actual - expected))) if actual.size else 0.0
        scale = float(np.max(np.abs(expected))) if expected.size else 0.0
        self.assertLessEqual(
            error,
            atol + rtol * scale,
            "max abs error {:.3e} exceeds {:.3e}".format(error, atol + rtol * scale),
        )


def pytest_generate_tests(metafunc):
    # from https://docs.pytest.org/en/latest/example/parametrize.html#a-quick-port-of-testscenarios  # noqa
    if metafunc.cls is None or not hasattr(metafunc.cls, "scenarios"):
        return
    idlist = []
    argvalues = []
    for scenario in metafunc.cls.scenarios:
        idlist.append(scenario[0])
        items = scenario[1].items()
        argnames = [x[0] for x in items]
        argvalues.append(([x[1] for x in items]))
    metafunc.parametrize(argnames, argvalues, ids=idlist, scope="class")
