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

"""Periodic spectral discretization of R^d.

The computational domain is the box ``[-L/2, L/2)^d`` sampled with ``n``
points per axis. The forward transform carries the quadrature weight
``h^d`` and the phase of the box origin, so the discrete coefficients
approximate the continuum transform

.. math:: \\hat f(\\xi) = \\int f(x) e^{-i \\xi \\cdot x} dx

and Parseval holds with the same constants as on R^d.

"""

import dataclasses
import functools
import itertools
import logging
import math

import numpy as np
from scipy import fft

LOG = logging.getLogger(__name__)

MAX_DERIVATIVE_ORDER = 4

# Fraction of spectral mass used to bound the data frequency for T_wrap.
WRAP_MASS_FRACTION = 0.9999


class NonFiniteFieldError(ValueError):
    "A field holds NaN or infinite samples."


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Periodic box with ``n`` points per axis in ``d`` dimensions.

    :param d: dimension, 1, 2 or 3
    :type d: int
    :param n: points per axis, a power of two no smaller than 8
    :type n: int
    :param length: side of the box
    :type length: float

    """

    d: int
    n: int
    length: float

    def __post_init__(self):
        if isinstance(self.d, bool) or self.d not in (1, 2, 3):
            raise ValueError("grid dimension must be 1, 2 or 3, got {!r}".format(self.d))
        if (
            isinstance(self.n, bool)
            or not isinstance(self.n, (int, np.integer))
            or self.n < 8
            or not _is_power_of_two(int(self.n))
        ):
            raise ValueError(
                "points per axis must be a power of two >= 8, got {!r}".format(self.n)
            )
        try:
            length = float(self.length)
        except (TypeError, ValueError):
            raise ValueError("box length must be a number, got {!r}".format(self.length))
        if not math.isfinite(length) or length <= 0:
            raise ValueError("box length must be positive, got {!r}".format(self.length))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", length)

    @property
    def spacing(self):
        return self.length / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n**self.d

    @property
    def volume(self):
        return self.length**self.d

    @property
    def cell(self):
        "Quadrature weight h^d."
        return self.spacing**self.d

    @property
    def axes(self):
        "Trailing array axes holding the grid."
        return tuple(range(-self.d, 0))

    def _along(self, vector, axis):
        shape = [1] * self.d
        shape[axis] = self.n
        return vector.reshape(shape)

    @functools.cached_property
    def axis_points(self):
        return -0.5 * self.length + self.spacing * np.arange(self.n)

    @functools.cached_property
    def coordinates(self):
        "Coordinate arrays ``(x_1, ..., x_d)`` in ``ij`` indexing."
        return tuple(np.meshgrid(*([self.axis_points] * self.d), indexing="ij"))

    @functools.cached_property
    def modes(self):
        "Integer wave numbers per axis, shaped to broadcast over the grid."
        k = np.rint(fft.fftfreq(self.n, d=1.0 / self.n))
        return tuple(self._along(k, axis) for axis in range(self.d))

    @functools.cached_property
    def xi(self):
        "Physical frequencies 2 pi k / L per axis."
        return tuple(2.0 * np.pi * k / self.length for k in self.modes)

    @functools.cached_property
    def xi_squared(self):
        total = np.zeros(self.shape)
        for xi in self.xi:
            total = total + xi**2
        return total

    @functools.cached_property
    def xi_max(self):
        return float(np.sqrt(self.xi_squared.max()))

    @functools.cached_property
    def origin_phase(self):
        # exp(i xi . L/2) is (-1)^(k_1 + ... + k_d) exactly
        sign = np.ones(self.shape)
        for k in self.modes:
            sign = sign * np.where(np.mod(k, 2) == 0, 1.0, -1.0)
        return sign

    @functools.cached_property
    def dealias_mask(self):
        keep = np.ones(self.shape, dtype=bool)
        for k in self.modes:
            keep = keep & (np.abs(k) <= self.n / 3.0)
        return keep

    def multiplier(self, multi_index):
        """Return the symbol (i xi)^alpha of a partial derivative.

        Odd-order factors vanish at the Nyquist mode so that real
        samples have real derivatives.

        """
        alpha = check_multi_index(self, multi_index)
        symbol = np.ones(self.shape, dtype=complex)
        for axis, order in enumerate(alpha):
            if not order:
                continue
            factor = (1j * self.xi[axis]) ** order
            if order % 2:
                factor = np.where(self.modes[axis] == -self.n // 2, 0.0, factor)
            symbol = symbol * factor
        return symbol

    def propagator(self, t, lam=0.0):
        "Symbol of e^{(i + lam) t Delta}."
        return np.exp(-(1j + lam) * self.xi_squared * t)


def make_grid(d, n, length):
    """Return a validated :class:`GridSpec`.

    :param d: dimension
    :type d: int
    :param n: points per axis
    :type n: int
    :param length: box side
    :type length: float

    """
    spec = GridSpec(d, n, length)
    LOG.debug("grid d=%d n=%d L=%g h=%g", spec.d, spec.n, spec.length, spec.spacing)
    return spec


def check_multi_index(spec, multi_index):
    alpha = tuple(int(a) for a in multi_index)
    if len(alpha) != spec.d:
        raise ValueError(
            "multi-index {!r} does not match dimension {}".format(multi_index, spec.d)
        )
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index {!r} has negative entries".format(multi_index))
    if sum(alpha) > MAX_DERIVATIVE_ORDER:
        raise ValueError(
            "derivative order {} exceeds {}".format(sum(alpha), MAX_DERIVATIVE_ORDER)
        )
    return alpha


def multi_indices(d, max_order):
    "All multi-indices of dimension d with order at most max_order."
    return [
        alpha
        for alpha in itertools.product(range(max_order + 1), repeat=d)
        if sum(alpha) <= max_order
    ]


@dataclasses.dataclass(frozen=True, eq=False)
class Field:
    """Complex samples phi = u1 + i u2 on a grid.

    The samples are copied on construction and the copy is read-only.

    """

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.spec.shape:
            if values.size != self.spec.size:
                raise ValueError(
                    "expected {} samples, got {}".format(self.spec.size, values.size)
                )
            values = values.reshape(self.spec.shape)
        bad = np.count_nonzero(~np.isfinite(values))
        if bad:
            raise NonFiniteFieldError("field contains {} non-finite samples".format(bad))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros(spec.shape, dtype=complex))

    @property
    def u1(self):
        return self.values.real

    @property
    def u2(self):
        return self.values.imag

    def with_values(self, values):
        return Field(self.spec, values)

    def _check_compatible(self, other):
        if other.spec != self.spec:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralField:
    "Fourier coefficients indexed by integer wave vectors."

    spec: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.spec.shape:
            raise ValueError(
                "expected coefficient shape {}, got {}".format(
                    self.spec.shape, coeffs.shape
                )
            )
        object.__setattr__(self, "coeffs", coeffs)

    def energy(self):
        "Squared L2 norm by Parseval."
        return float(np.sum(np.abs(self.coeffs) ** 2) / self.spec.volume)


def transform(field):
    "Forward transform carrying the h^d weight and the origin phase."
    spec = field.spec
    coeffs = spec.cell * spec.origin_phase * fft.fftn(field.values)
    return SpectralField(spec, coeffs)


def inverse(spectral):
    spec = spectral.spec
    values = fft.ifftn(spectral.coeffs * spec.origin_phase / spec.cell)
    return Field(spec, values)


def differentiate(values, spec, multi_index):
    """Spectral partial derivative of raw samples.

    The grid occupies the trailing ``d`` axes of ``values``; leading
    axes are treated as a batch. Real samples give real derivatives.

    """
    return derivatives(values, spec, [multi_index])[0]


def derivatives(values, spec, index_list):
    "Several partial derivatives of the same samples from one transform."
    values = np.asarray(values)
    real = np.isrealobj(values)
    coeffs = fft.fftn(values, axes=spec.axes)
    result = []
    for multi_index in index_list:
        alpha = check_multi_index(spec, multi_index)
        if not any(alpha):
            result.append(np.array(values, copy=True))
            continue
        out = fft.ifftn(coeffs * spec.multiplier(alpha), axes=spec.axes)
        result.append(out.real if real else out)
    return result


def derivative(field, multi_index):
    """Return the partial derivative of a field.

    :param field: samples to differentiate
    :type field: Field
    :param multi_index: order per axis, total order at most 4
    :type multi_index: tuple

    """
    return field.with_values(differentiate(field.values, field.spec, multi_index))


def laplacian_values(values, spec):
    return fft.ifftn(-spec.xi_squared * fft.fftn(values, axes=spec.axes), axes=spec.axes)


def dealias(spectral):
    "Zero every coefficient with some |k_j| > n/3."
    return SpectralField(spectral.spec, spectral.coeffs * spectral.spec.dealias_mask)


def dealias_values(values, spec):
    out = fft.ifftn(fft.fftn(values, axes=spec.axes) * spec.dealias_mask, axes=spec.axes)
    return out.real if np.isrealobj(values) else out


def integrate(values, spec):
    "Rectangle-rule integral over the box."
    return np.sum(values, axis=spec.axes) * spec.cell


def lp_values(values, spec, p):
    if p < 1:
        raise ValueError("L^p norm needs p >= 1, got {!r}".format(p))
    magnitude = np.abs(values)
    if math.isinf(p):
        return float(magnitude.max())
    return float(integrate(magnitude**p, spec) ** (1.0 / p))


def lp_norm(field, p):
    """Return the L^p norm of a field, with p = inf as the grid maximum.

    :param field: samples
    :type field: Field
    :param p: exponent in [1, inf]
    :type p: float

    """
    return lp_values(field.values, field.spec, p)


def sobolev_norm(field, s):
    "H^s norm from the multiplier (1 + |xi|^2)^(s/2)."
    spec = field.spec
    coeffs = transform(field).coeffs
    weight = (1.0 + spec.xi_squared) ** s
    return float(np.sqrt(np.sum(weight * np.abs(coeffs) ** 2) / spec.volume))


def wkp_norm(field, k, p):
    "Sum of L^p norms of all partial derivatives of order at most k."
    if k > MAX_DERIVATIVE_ORDER:
        raise ValueError(
            "W^{{k,p}} norm supports k <= {}, got {}".format(MAX_DERIVATIVE_ORDER, k)
        )
    spec = field.spec
    parts = derivatives(field.values, spec, multi_indices(spec.d, k))
    return sum(lp_values(part, spec, p) for part in parts)


def free_propagator(field, t):
    "Apply e^{it Delta}, the multiplier e^{-i |xi|^2 t}."
    if t == 0:
        return field
    spec = field.spec
    values = fft.ifftn(fft.fftn(field.values) * spec.propagator(t))
    return field.with_values(values)


def wraparound_time(field, fraction=WRAP_MASS_FRACTION):
    """Return L / (4 xi_data), the time before packets wrap around the box.

    ``xi_data`` is the smallest frequency radius holding ``fraction`` of
    the spectral mass of ``field``. A field with no mass above zero
    frequency never wraps.

    """
    spec = field.spec
    mass = np.abs(fft.fftn(field.values)).ravel() ** 2
    total = mass.sum()
    if total == 0:
        return math.inf
    radius = np.sqrt(spec.xi_squared).ravel()
    order = np.argsort(radius, kind="stable")
    cumulative = np.cumsum(mass[order])
    index = int(np.searchsorted(cumulative, fraction * total))
    xi_data = radius[order][min(index, radius.size - 1)]
    if xi_data == 0:
        return math.inf
    return spec.length / (4.0 * xi_data)
