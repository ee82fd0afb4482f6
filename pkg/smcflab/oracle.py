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

"""Brute force reference implementations.

Nothing here goes through the spectral machinery: derivatives come from
periodic fourth order centered stencils, the metric is inverted with
``numpy.linalg``, the frame is built by projection and every
contraction is an explicit loop over indices.

"""

import dataclasses
import logging
import math

import numpy as np
from scipy import stats

from smcflab import dynamics, geometry, grid

LOG = logging.getLogger(__name__)

MIN_POINTS = 16


def _shift(f, k, axis):
    "Samples of f at x + k h along axis."
    return np.roll(f, -k, axis=axis)


def stencil_first(f, h, axis):
    return (
        8.0 * (_shift(f, 1, axis) - _shift(f, -1, axis))
        - (_shift(f, 2, axis) - _shift(f, -2, axis))
    ) / (12.0 * h)


def stencil_second(f, h, axis):
    return (
        -(_shift(f, 2, axis) + _shift(f, -2, axis))
        + 16.0 * (_shift(f, 1, axis) + _shift(f, -1, axis))
        - 30.0 * f
    ) / (12.0 * h * h)


@dataclasses.dataclass(frozen=True, eq=False)
class OracleGeometry:
    metric: np.ndarray
    inverse_metric: np.ndarray
    sqrt_det: np.ndarray
    christoffel: np.ndarray
    frame: np.ndarray
    lam: np.ndarray
    second_fundamental_form: np.ndarray
    mean_curvature: np.ndarray
    skew_mean_curvature: np.ndarray
    A_normsq: np.ndarray
    volume: float


def fd_geometry(field):
    """Geometry of a state from finite differences.

    :param field: state on a grid with at least 16 points per axis
    :type field: smcflab.grid.Field

    """
    spec = field.spec
    if spec.n < MIN_POINTS:
        raise ValueError(
            "finite difference oracle needs n >= {}, got {}".format(MIN_POINTS, spec.n)
        )
    d = spec.d
    h = spec.spacing
    shape = spec.shape
    u = (field.u1, field.u2)

    du = np.empty((d, 2) + shape)
    d2u = np.empty((d, d, 2) + shape)
    for a in range(2):
        for i in range(d):
            du[i, a] = stencil_first(u[a], h, i)
            for j in range(d):
                if i == j:
                    d2u[i, j, a] = stencil_second(u[a], h, i)
                else:
                    d2u[i, j, a] = stencil_first(stencil_first(u[a], h, j), h, i)

    g = np.empty((d, d) + shape)
    for i in range(d):
        for j in range(d):
            g[i, j] = (1.0 if i == j else 0.0) + du[i, 0] * du[j, 0] + du[i, 1] * du[j, 1]
    stacked = np.moveaxis(g, (0, 1), (-2, -1))
    ginv = np.moveaxis(np.linalg.inv(stacked), (-2, -1), (0, 1))
    sqrt_det = np.sqrt(np.linalg.det(stacked))

    gamma = np.zeros((d, d, d) + shape)
    for l in range(d):  # noqa: E741
        for i in range(d):
            for j in range(d):
                for m in range(d):
                    for a in range(2):
                        gamma[l, i, j] += ginv[l, m] * d2u[i, j, a] * du[m, a]

    tangents = np.zeros((d, d + 2) + shape)
    for i in range(d):
        tangents[i, i] = 1.0
        tangents[i, d] = du[i, 0]
        tangents[i, d + 1] = du[i, 1]

    raw1 = np.zeros((d + 2,) + shape)
    for i in range(d):
        raw1[i] = du[i, 0]
    raw1[d] = -1.0
    nu1 = raw1 / np.sqrt(np.sum(raw1**2, axis=0))

    # normal part of -e_{d+2}; it is orthogonal to nu1 automatically
    w = np.zeros((d + 2,) + shape)
    w[d + 1] = -1.0
    normal = w.copy()
    for i in range(d):
        for j in range(d):
            normal -= tangents[i] * ginv[i, j] * np.sum(tangents[j] * w, axis=0)
    size = np.sqrt(np.sum(normal**2, axis=0))
    nu2 = normal / size
    frame = np.stack([nu1, nu2])

    A = np.zeros((2, d, d) + shape)
    for alpha in range(2):
        for i in range(d):
            for j in range(d):
                for a in range(2):
                    A[alpha, i, j] += d2u[i, j, a] * frame[alpha, d + a]

    mean = np.zeros((2,) + shape)
    for alpha in range(2):
        for i in range(d):
            for j in range(d):
                mean[alpha] += ginv[i, j] * A[alpha, i, j]
    H = mean[0] * nu1 + mean[1] * nu2
    JH = mean[0] * nu2 - mean[1] * nu1

    normsq = np.zeros(shape)
    for alpha in range(2):
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    for m in range(d):
                        normsq += (
                            ginv[i, k] * ginv[j, m] * A[alpha, i, j] * A[alpha, k, m]
                        )

    return OracleGeometry(
        metric=g,
        inverse_metric=ginv,
        sqrt_det=sqrt_det,
        christoffel=gamma,
        frame=frame,
        lam=1.0 / size,
        second_fundamental_form=A,
        mean_curvature=H,
        skew_mean_curvature=JH,
        A_normsq=normsq,
        volume=float(np.sum(sqrt_det) * h**d),
    )


def free_gaussian_exact(spec, amplitude, width, modulation, t):
    """Closed form free Schrodinger evolution of a Gaussian packet.

    The packet ``amplitude exp(-|x|^2 / 2 width^2) exp(i modulation x_1)``
    evolves under phi_t = i Laplace phi; each axis contributes a factor
    ``(1 + 2it/width^2)^(-1/2) exp(-(x - 2mt)^2 / 2(width^2 + 2it))``
    times the plane wave ``exp(i(m x - m^2 t))``, with ``m`` nonzero
    only on the first axis.

    """
    if not width > 0:
        raise ValueError("width must be positive, got {!r}".format(width))
    spread = width**2 + 2j * t
    values = np.full(spec.shape, complex(amplitude))
    for axis, x in enumerate(spec.coordinates):
        m = modulation if axis == 0 else 0.0
        values = values * np.sqrt(width**2 / spread)
        values = values * np.exp(-((x - 2.0 * m * t) ** 2) / (2.0 * spread))
        values = values * np.exp(1j * (m * x - m * m * t))
    return grid.Field(spec, values)


_SPECTRAL = {
    "metric": lambda b: b.metric.g,
    "inverse_metric": lambda b: b.metric.ginv,
    "sqrt_det": lambda b: b.metric.sqrt_det,
    "christoffel": lambda b: b.gamma,
    "frame": lambda b: np.stack(b.frame.normals),
    "lam": lambda b: b.frame.lam,
    "second_fundamental_form": lambda b: b.curvature.A,
    "mean_curvature": lambda b: b.curvature.H,
    "skew_mean_curvature": lambda b: b.curvature.JH,
    "A_normsq": lambda b: b.curvature.A_normsq,
}

QUANTITIES = tuple(_SPECTRAL)


def bump_family(d=2, length=24.0, amplitude=0.1, width=1.5):
    "Return a function sampling the reference bump at a given resolution."

    def make(n):
        spec = grid.GridSpec(d, n, length)
        return dynamics.initial_data(spec, "sine_bump", amplitude, width)

    return make


@dataclasses.dataclass(frozen=True)
class OracleReport:
    quantity: str
    resolutions: tuple
    errors: tuple
    order: float
    min_order: float = 1.0

    @property
    def exact(self):
        return all(e == 0 for e in self.errors)

    @property
    def monotone(self):
        return all(b <= a for a, b in zip(self.errors, self.errors[1:]))

    @property
    def passed(self):
        return self.exact or self.order >= self.min_order

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def format(self):
        order = "exact" if self.exact else "{:.2f}".format(self.order)
        errors = " ".join(
            "n{}={:.3e}".format(n, e) for n, e in zip(self.resolutions, self.errors)
        )
        return "{} oracle-{} order={} {}".format(self.status, self.quantity, order, errors)


def convergence_order(resolutions, errors):
    "Minus the slope of log2(error) against log2(n); inf when exact."
    pairs = [(n, e) for n, e in zip(resolutions, errors) if e > 0]
    if len(pairs) < 2:
        return math.inf
    n, e = zip(*pairs)
    fit = stats.linregress(np.log2(n), np.log2(e))
    return -float(fit.slope)


def compare(quantity, resolutions, make_state=None, min_order=1.0):
    """Compare spectral and finite difference values of a quantity.

    :param quantity: one of ``QUANTITIES``
    :type quantity: str
    :param resolutions: at least three grid sizes
    :type resolutions: list
    :param make_state: function from grid size to state, the bump family by default
    :type make_state: callable

    """
    if quantity not in _SPECTRAL:
        raise ValueError(
            "unrecognized quantity {!r}, expected one of {}".format(
                quantity, ", ".join(QUANTITIES)
            )
        )
    resolutions = tuple(sorted(int(n) for n in resolutions))
    if len(resolutions) < 3:
        raise ValueError("need at least 3 resolutions, got {}".format(resolutions))
    if make_state is None:
        make_state = bump_family()
    errors = []
    for n in resolutions:
        field = make_state(n)
        spectral = _SPECTRAL[quantity](geometry.geometry_bundle(field, flag=False))
        brute = getattr(fd_geometry(field), quantity)
        errors.append(float(np.max(np.abs(spectral - brute))))
    report = OracleReport(
        quantity=quantity,
        resolutions=resolutions,
        errors=tuple(errors),
        order=convergence_order(resolutions, errors),
        min_order=min_order,
    )
    LOG.info("%s", report.format())
    return report
