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

"""Measurements taken along a run and the checks built on them."""

import dataclasses
import logging
import math

import numpy as np
from scipy import stats

from smcflab import geometry, grid

LOG = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 8

# Used for the line, where no admissible exponent plan exists.
LINE_SOBOLEV_ORDER = 3


@dataclasses.dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    l2: float
    h2: float
    hk: float
    w2qprime: float
    sup_du: float
    sup_d2u: float
    volume: float
    a_l2_sq: float
    a_sup: float
    grad_a_l2_sq: float
    linf: float

    def as_row(self):
        return [getattr(self, name) for name in COLUMNS]

    @classmethod
    def from_row(cls, row):
        "Build a record from a mapping of column names to values."
        return cls(**{name: float(row[name]) for name in COLUMNS})


COLUMNS = tuple(f.name for f in dataclasses.fields(DiagnosticsRecord))


@dataclasses.dataclass(frozen=True)
class ParameterPlan:
    """Exponents of the small data global existence statement.

    ``omega``, ``theta`` and ``theta1`` are the Gagliardo-Nirenberg
    exponents used when closing the decay estimate; ``admissible``
    tells whether they close it.

    """

    d: int
    delta: float
    q: float
    q_prime: float
    k: int
    k0: int
    decay_exponent: float
    omega: float
    theta: float
    theta1: float
    admissible: bool


def parameter_plan(d, delta=0.05):
    """Return the exponent plan for dimension ``d``.

    :param d: dimension, at least 2
    :type d: int
    :param delta: small parameter with 0 < delta < 1/d
    :type delta: float

    """
    if d < 2:
        raise ValueError("the exponent plan needs d >= 2, got {!r}".format(d))
    if not (0.0 < delta < 1.0 / d):
        raise ValueError(
            "delta must lie in (0, 1/{}), got {!r}; q would leave (1, 2)".format(d, delta)
        )
    inv_q = 1.0 / d + 0.5 - delta
    q = 1.0 / inv_q
    q_prime = 1.0 / (1.0 - inv_q)
    k = math.floor(max((d + 7) / 2.0, d + 1.0)) + 1
    k0 = d // 2 + 3
    decay = 0.5 * d * (2.0 * inv_q - 1.0)
    gap = d * (0.5 - inv_q)
    omega = (k - 1 - d / q_prime) / (k + gap)
    theta = (k - 2 - d / q_prime) / (k - 1 + gap)
    theta1 = (k - 2 - d / 2.0) / (gap + k - 2)
    least = min(theta, omega)
    admissible = bool(
        0.5 * d * (1.0 - 2.0 * inv_q) * 2.0 * least < -1.0
        and least > 0.5
        and theta1 * d * (2.0 * inv_q - 1.0) > 1.0
    )
    plan = ParameterPlan(
        d=d,
        delta=delta,
        q=q,
        q_prime=q_prime,
        k=k,
        k0=k0,
        decay_exponent=decay,
        omega=omega,
        theta=theta,
        theta1=theta1,
        admissible=admissible,
    )
    LOG.debug("parameter plan %s", plan)
    return plan


def plan_orders(plan):
    "Sobolev order and Lebesgue exponent used by a record."
    if plan is None:
        return LINE_SOBOLEV_ORDER, math.inf
    return plan.k, plan.q_prime


def record(field, t, plan=None, bundle=None):
    """Measure every tracked norm of a state.

    :param field: current state
    :type field: smcflab.grid.Field
    :param t: solver time
    :type t: float
    :param plan: exponent plan, ``None`` on the line
    :type plan: ParameterPlan

    """
    spec = field.spec
    if bundle is None:
        bundle = geometry.geometry_bundle(field)
    k, q_prime = plan_orders(plan)
    weight = bundle.metric.sqrt_det
    a_normsq = np.maximum(bundle.curvature.A_normsq, 0.0)
    if np.any(a_normsq):
        grad = np.maximum(geometry.grad_A_normsq(bundle), 0.0)
    else:
        grad = np.zeros(spec.shape)
    return DiagnosticsRecord(
        t=float(t),
        l2=grid.lp_norm(field, 2),
        h2=grid.sobolev_norm(field, 2),
        hk=grid.sobolev_norm(field, k),
        w2qprime=grid.wkp_norm(field, 2, q_prime),
        sup_du=bundle.metric.sup_du,
        sup_d2u=float(np.sqrt(np.max(np.sum(bundle.d2u**2, axis=(0, 1, 2))))),
        volume=float(grid.integrate(weight, spec)),
        a_l2_sq=float(grid.integrate(weight * a_normsq, spec)),
        a_sup=float(np.sqrt(np.max(a_normsq))),
        grad_a_l2_sq=float(grid.integrate(weight * grad, spec)),
        linf=grid.lp_norm(field, np.inf),
    )


def _column(series, name):
    values = []
    for entry in series:
        if isinstance(entry, DiagnosticsRecord):
            values.append(getattr(entry, name))
        else:
            values.append(float(entry[name]))
    return np.asarray(values, dtype=float)


def fit_decay_exponent(series, t_lo, t_hi, column="w2qprime"):
    """Least squares slope of log(column) against log(t) on [t_lo, t_hi].

    Returns ``(slope, stderr, count)``.

    """
    if t_lo < 1:
        raise ValueError("decay fits start at t >= 1, got t_lo={!r}".format(t_lo))
    if column not in COLUMNS or column == "t":
        raise ValueError("unknown series column {!r}".format(column))
    t = _column(series, "t")
    y = _column(series, column)
    window = (t >= t_lo) & (t <= t_hi)
    count = int(np.count_nonzero(window))
    if count < MIN_FIT_SAMPLES:
        raise ValueError(
            "need at least {} samples in [{}, {}], found {}".format(
                MIN_FIT_SAMPLES, t_lo, t_hi, count
            )
        )
    if np.any(y[window] <= 0):
        raise ValueError("column {!r} is not positive on the window".format(column))
    fit = stats.linregress(np.log(t[window]), np.log(y[window]))
    LOG.info("%s decays with slope %.4f +/- %.2g", column, fit.slope, fit.stderr)
    return float(fit.slope), float(fit.stderr), count


def check_pointwise_e1(field, bundle=None):
    """Largest relative violation of |A|^2 <= |D^2u|^2 <= (1+|Du|^2)^3 |A|^2."""
    if bundle is None:
        bundle = geometry.geometry_bundle(field)
    a2 = bundle.curvature.A_normsq
    hess = np.sum(bundle.d2u**2, axis=(0, 1, 2))
    grad = bundle.metric.du_norm_sq
    lower = np.maximum(a2 - hess, 0.0)
    upper = np.maximum(hess - (1.0 + grad) ** 3 * a2, 0.0)
    return float(np.max(np.maximum(lower, upper) / (1.0 + hess)))


def hamilton_ratio(field, i=1, j=1):
    """Ratio of the two sides of the interpolation inequality for A with C = 1.

    Only ``(i, j) = (1, 1)`` is available. A flat state gives 0 and a
    vanishing right side under a nonzero left side gives infinity.

    """
    if (i, j) != (1, 1):
        raise ValueError("only (i, j) = (1, 1) is supported, got {!r}".format((i, j)))
    bundle = geometry.geometry_bundle(field)
    spec = field.spec
    weight = bundle.metric.sqrt_det
    a_sup = math.sqrt(max(float(np.max(bundle.curvature.A_normsq)), 0.0))
    grad = np.maximum(geometry.grad_A_normsq(bundle), 0.0)
    lhs = float(grid.integrate(weight * grad ** (i / j), spec))
    rhs = a_sup ** (2.0 * (i / j - 1.0)) * float(grid.integrate(weight * grad, spec))
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    ratio = lhs / rhs
    LOG.debug("hamilton ratio %.6g", ratio)
    return ratio


def holder_ratio(field, p):
    """||A||_p over ||A||_2^(2/p) ||A||_inf^(1 - 2/p), at most 1."""
    if not p >= 2:
        raise ValueError("holder_ratio needs p >= 2, got {!r}".format(p))
    bundle = geometry.geometry_bundle(field)
    norm_p = geometry.tensor_norm_A(field, 0, p, bundle=bundle)
    norm_2 = geometry.tensor_norm_A(field, 0, 2, bundle=bundle)
    norm_inf = geometry.tensor_norm_A(field, 0, np.inf, bundle=bundle)
    if math.isinf(p):
        bound = norm_inf
    else:
        bound = norm_2 ** (2.0 / p) * norm_inf ** (1.0 - 2.0 / p)
    if bound == 0:
        return 0.0
    return norm_p / bound


@dataclasses.dataclass(frozen=True)
class ScatteringProfile:
    times: tuple
    profiles: tuple
    table: np.ndarray

    @property
    def phi_plus(self):
        "The last pulled back state, the estimate of the scattering state."
        return self.profiles[-1]

    def distance(self, t_a, t_b):
        return float(self.table[self.times.index(t_a), self.times.index(t_b)])


def scattering_profile(snapshots):
    """Pull states back by the free flow and tabulate their H^2 distances.

    :param snapshots: ``(t, field)`` pairs at increasing times >= 1
    :type snapshots: list

    """
    snapshots = list(snapshots)
    if len(snapshots) < 3:
        raise ValueError("need at least 3 snapshots, got {}".format(len(snapshots)))
    times = tuple(float(t) for t, _ in snapshots)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must increase, got {}".format(times))
    if times[0] < 1:
        raise ValueError("snapshot times must be >= 1, got {}".format(times[0]))
    spec = snapshots[0][1].spec
    for t, field in snapshots:
        if field.spec != spec:
            raise ValueError("snapshot at t={} is on a different grid".format(t))
    profiles = tuple(grid.free_propagator(field, -t) for t, field in snapshots)
    size = len(profiles)
    table = np.zeros((size, size))
    for a in range(size):
        for b in range(a + 1, size):
            dist = grid.sobolev_norm(profiles[a] - profiles[b], 2)
            table[a, b] = table[b, a] = dist
    return ScatteringProfile(times, profiles, table)


@dataclasses.dataclass(frozen=True)
class EnergyReport:
    times: np.ndarray
    d_a_l2_sq: np.ndarray
    d_grad_a_l2_sq: np.ndarray
    ratio_a: np.ndarray
    ratio_grad: np.ndarray
    growth: float

    @property
    def bounded(self):
        return bool(
            np.all(np.isfinite(self.ratio_a))
            and np.all(np.isfinite(self.ratio_grad))
            and self.growth <= 10.0
        )


def _gronwall_ratio(rate, a_sup, value):
    denom = a_sup**2 * value
    out = np.zeros_like(rate)
    np.divide(rate, denom, out=out, where=denom > 0)
    return out


def _growth(ratio):
    peak = float(np.max(np.abs(ratio)))
    first = abs(float(ratio[0]))
    if peak == 0:
        return 0.0
    if first == 0:
        return math.inf
    return peak / first


def energy_monitor(series):
    "Time derivatives of the curvature energies and their Gronwall ratios."
    series = list(series)
    if len(series) < 3:
        raise ValueError("energy monitor needs at least 3 records")
    t = _column(series, "t")
    a_sup = _column(series, "a_sup")
    a_l2 = _column(series, "a_l2_sq")
    grad = _column(series, "grad_a_l2_sq")
    d_a = np.gradient(a_l2, t)
    d_grad = np.gradient(grad, t)
    ratio_a = _gronwall_ratio(d_a, a_sup, a_l2)
    ratio_grad = _gronwall_ratio(d_grad, a_sup, grad)
    growth = max(_growth(ratio_a), _growth(ratio_grad))
    report = EnergyReport(t, d_a, d_grad, ratio_a, ratio_grad, growth)
    LOG.info("energy ratio growth %.3g over the run", growth)
    if not report.bounded:
        LOG.warning("energy ratio grew by %.3g", growth)
    return report


def volume_drift(series):
    "Largest relative change of the induced volume from its first value."
    volume = _column(series, "volume")
    if volume.size < 2:
        raise ValueError("volume drift needs at least 2 records")
    return float(np.max(np.abs(volume - volume[0])) / volume[0])


def refinement_order(values, floor=0.0):
    """Order of a quantity computed with step sizes dt, dt/2, dt/4, ...

    Successive differences cancel the dt -> 0 limit, so a drift the flow
    itself produces does not mask the time discretization error. Returns
    ``(order, differences)``; the order is inf when every difference is
    at most ``floor``.

    """
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise ValueError("refinement order needs at least 3 step sizes")
    differences = np.abs(np.diff(values))
    if np.all(differences <= floor):
        return math.inf, differences
    if np.any(differences[1:] <= floor):
        # the finer differences are lost in round-off
        return math.inf, differences
    orders = np.log2(differences[:-1] / differences[1:])
    return float(np.min(orders)), differences


def bootstrap_profile(series, plan):
    "<t>^decay ||phi||_{W^{2,q'}} + ||phi||_{H^k} per record."
    t = _column(series, "t")
    bracket = np.sqrt(1.0 + t**2)
    return bracket**plan.decay_exponent * _column(series, "w2qprime") + _column(
        series, "hk"
    )
