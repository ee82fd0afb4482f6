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

"""Differential geometry of the graph F(x) = (x, u1(x), u2(x)).

Per-point quantities are numpy arrays whose leading axes index tensor
components and whose trailing axes index grid points, so the same
routines work on a whole grid or on a single point.

Layouts used throughout:

``du[i, a]``
    first derivative of ``u_a`` along ``x_i``
``d2u[i, j, a]``
    second derivative of ``u_a`` along ``x_i``, ``x_j``
``A[a, i, j]``
    second fundamental form ``h^a_ij``, ``a`` indexing the normal frame

"""

import collections
import dataclasses
import functools
import itertools
import logging
import math

import numpy as np

from smcflab import grid

LOG = logging.getLogger(__name__)

# States with sup |Du| above this are outside the small data regime.
FLAG_GRADIENT = 1.0


class GeometryError(ValueError):
    "The induced metric is singular or not finite."


@dataclasses.dataclass(frozen=True, eq=False)
class MetricData:
    g: np.ndarray
    ginv: np.ndarray
    sqrt_det: np.ndarray
    du: np.ndarray

    @property
    def du_norm_sq(self):
        return np.sum(self.du**2, axis=(0, 1))

    @property
    def sup_du(self):
        return float(np.sqrt(np.max(self.du_norm_sq)))

    @property
    def flagged(self):
        return self.sup_du > FLAG_GRADIENT


@dataclasses.dataclass(frozen=True, eq=False)
class FrameData:
    nu1: np.ndarray
    nu2: np.ndarray
    lam: np.ndarray
    # sqrt(1 + |du1|^2), the normalization of nu1
    s: np.ndarray
    # (du1 . du2) / (1 + |du1|^2)
    c: np.ndarray

    @property
    def normals(self):
        return (self.nu1, self.nu2)


@dataclasses.dataclass(frozen=True, eq=False)
class CurvatureData:
    A: np.ndarray
    mean: np.ndarray
    H: np.ndarray
    JH: np.ndarray
    A_normsq: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class GeometryBundle:
    """Everything the diagnostics need about one state.

    The Christoffel symbols are computed on first access.

    """

    field: grid.Field
    du: np.ndarray
    d2u: np.ndarray
    metric: MetricData
    frame: FrameData
    curvature: CurvatureData

    @property
    def spec(self):
        return self.field.spec

    @property
    def tangents(self):
        return tangent_vectors(self.du)

    @functools.cached_property
    def gamma(self):
        return christoffel(self.metric, self.field)


def jet(field):
    """Return spectral ``(du, d2u)`` of a field.

    One forward transform of the stacked real components feeds every
    derivative.

    """
    spec = field.spec
    d = spec.d
    u = np.stack([field.u1, field.u2])
    unit = np.eye(d, dtype=int)
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    indices = [tuple(unit[i]) for i in range(d)]
    indices += [tuple(unit[i] + unit[j]) for i, j in pairs]
    parts = grid.derivatives(u, spec, indices)
    du = np.stack(parts[:d])
    d2u = np.empty((d, d) + u.shape)
    for (i, j), part in zip(pairs, parts[d:]):
        d2u[i, j] = part
        d2u[j, i] = part
    return du, d2u


def gradient(field):
    "Spectral first derivatives ``du`` of a field."
    spec = field.spec
    unit = np.eye(spec.d, dtype=int)
    u = np.stack([field.u1, field.u2])
    return np.stack(grid.derivatives(u, spec, [tuple(e) for e in unit]))


def tangent_vectors(du):
    "Stack of the tangent vectors dF/dx_i in R^(d+2)."
    d = du.shape[0]
    rest = du.shape[2:]
    t = np.zeros((d, d + 2) + rest)
    for i in range(d):
        t[i, i] = 1.0
        t[i, d] = du[i, 0]
        t[i, d + 1] = du[i, 1]
    return t


def _metric_arrays(du):
    d = du.shape[0]
    rest = du.shape[2:]
    eye_d = np.eye(d).reshape((d, d) + (1,) * len(rest))
    g = eye_d + np.einsum("ia...,ja...->ij...", du, du)
    # Woodbury: g = I + P^T P with P the 2 x d matrix du^T, so
    # g^-1 = I - P^T (I_2 + P P^T)^-1 P and det g = det(I_2 + P P^T).
    m = np.einsum("ia...,ib...->ab...", du, du)
    m00 = 1.0 + m[0, 0]
    m11 = 1.0 + m[1, 1]
    m01 = m[0, 1]
    det = m00 * m11 - m01 * m01
    if not np.all(np.isfinite(det)):
        raise GeometryError("metric determinant is not finite")
    if np.any(det <= 0):
        raise GeometryError(
            "singular metric, min det g = {!r}".format(float(np.min(det)))
        )
    minv = np.stack([np.stack([m11, -m01]), np.stack([-m01, m00])]) / det
    ginv = eye_d - np.einsum("ia...,ab...,jb...->ij...", du, minv, du)
    return g, ginv, np.sqrt(det)


def metric_from_gradient(du):
    """Metric of the graph at points with the given ``du``.

    :param du: first derivatives, shape ``(d, 2, ...)``
    :type du: numpy.ndarray

    """
    du = np.asarray(du, dtype=float)
    g, ginv, sqrt_det = _metric_arrays(du)
    return MetricData(g, ginv, sqrt_det, du)


def assemble_metric(field, du=None):
    """Induced metric g_ij = delta_ij + du_i . du_j of a field.

    :param field: graph state
    :type field: smcflab.grid.Field
    :param du: precomputed first derivatives, if available
    :type du: numpy.ndarray

    """
    if du is None:
        du, _ = jet(field)
    metric = metric_from_gradient(du)
    if metric.flagged:
        LOG.warning(
            "sup |Du| = %.3g exceeds %g, outside the small data regime",
            metric.sup_du,
            FLAG_GRADIENT,
        )
    return metric


def christoffel(metric, field):
    """Christoffel symbols ``gamma[l, i, j]`` of the induced metric.

    The metric samples are differentiated spectrally.

    """
    spec = field.spec
    d = spec.d
    unit = np.eye(d, dtype=int)
    parts = grid.derivatives(metric.g, spec, [tuple(unit[k]) for k in range(d)])
    # dg[i, j, k] = d_k g_ij
    dg = np.stack(parts, axis=2)
    t = (
        np.einsum("imj...->mij...", dg)
        + np.einsum("jmi...->mij...", dg)
        - np.einsum("ijm...->mij...", dg)
    )
    return 0.5 * np.einsum("lm...,mij...->lij...", metric.ginv, t)


def frame_from_gradient(du):
    """Normal frame at points with the given ``du``.

    ``nu1`` is the normal with vanishing last component and ``nu2``
    completes an oriented orthonormal frame of the normal plane.

    """
    du = np.asarray(du, dtype=float)
    d = du.shape[0]
    rest = du.shape[2:]
    a = du[:, 0]
    b = du[:, 1]
    s2 = 1.0 + np.sum(a * a, axis=0)
    s = np.sqrt(s2)
    c = np.sum(a * b, axis=0) / s2
    v = b - c * a
    lam = np.sqrt(np.sum(v * v, axis=0) + c * c + 1.0)
    nu1 = np.zeros((d + 2,) + rest)
    nu1[:d] = a / s
    nu1[d] = -1.0 / s
    nu2 = np.empty((d + 2,) + rest)
    nu2[:d] = v / lam
    nu2[d] = c / lam
    nu2[d + 1] = -1.0 / lam
    return FrameData(nu1, nu2, lam, s, c)


def normal_frame(field, du=None):
    if du is None:
        du, _ = jet(field)
    return frame_from_gradient(du)


def curvature_from_jet(d2u, frame, metric):
    d = d2u.shape[0]
    # d^2 F / dx_i dx_j has only the last two components
    A = np.stack(
        [d2u[:, :, 0] * nu[d] + d2u[:, :, 1] * nu[d + 1] for nu in frame.normals]
    )
    ginv = metric.ginv
    mean = np.einsum("ij...,aij...->a...", ginv, A)
    H = mean[0] * frame.nu1 + mean[1] * frame.nu2
    JH = mean[0] * frame.nu2 - mean[1] * frame.nu1
    raised = np.einsum("ik...,aij...->akj...", ginv, A)
    raised = np.einsum("jl...,akj...->akl...", ginv, raised)
    normsq = np.einsum("akl...,akl...->...", raised, A)
    return CurvatureData(A, mean, H, JH, normsq)


def second_fundamental_form(field, frame, metric, d2u=None):
    """Second fundamental form, mean curvature and J H.

    :param field: graph state
    :type field: smcflab.grid.Field
    :param frame: normal frame of the same state
    :type frame: FrameData
    :param metric: metric of the same state
    :type metric: MetricData

    """
    if d2u is None:
        _, d2u = jet(field)
    return curvature_from_jet(d2u, frame, metric)


def geometry_bundle(field, flag=True):
    "Compute every per-point geometric quantity of a field."
    du, d2u = jet(field)
    metric = assemble_metric(field, du=du) if flag else metric_from_gradient(du)
    frame = frame_from_gradient(du)
    return GeometryBundle(
        field=field,
        du=du,
        d2u=d2u,
        metric=metric,
        frame=frame,
        curvature=curvature_from_jet(d2u, frame, metric),
    )


def covariant_derivative_A(bundle):
    """Return ``nabla[a, k, i, j]``, the covariant derivative of A.

    The tangential part uses the Christoffel symbols, the normal part
    the connection forms ``d_k nu_b . nu_a`` of the frame.

    """
    spec = bundle.spec
    d = spec.d
    unit = np.eye(d, dtype=int)
    first = [tuple(unit[k]) for k in range(d)]
    A = bundle.curvature.A
    gamma = bundle.gamma
    dA = np.stack(grid.derivatives(A, spec, first), axis=1)
    nu = np.stack(bundle.frame.normals)
    dnu = np.stack(grid.derivatives(nu, spec, first), axis=1)
    # omega[a, k, b] = d_k nu_b . nu_a
    omega = np.einsum("kbv...,av...->akb...", np.moveaxis(dnu, 1, 0), nu)
    return (
        dA
        - np.einsum("mki...,amj...->akij...", gamma, A)
        - np.einsum("mkj...,aim...->akij...", gamma, A)
        + np.einsum("akb...,bij...->akij...", omega, A)
    )


def grad_A_normsq(bundle):
    "Pointwise |nabla A|^2 contracted with three inverse metrics."
    nabla = covariant_derivative_A(bundle)
    ginv = bundle.metric.ginv
    raised = np.einsum("kp...,xkij...->xpij...", ginv, nabla)
    raised = np.einsum("iq...,xpij...->xpqj...", ginv, raised)
    raised = np.einsum("jr...,xpqj...->xpqr...", ginv, raised)
    return np.einsum("xpqr...,xpqr...->...", raised, nabla)


def _check_p(p):
    if not (p >= 2):
        raise ValueError("tensor norms need p in [2, inf], got {!r}".format(p))


def _integral_norm(pieces, weight, spec, p):
    # pieces are pointwise norms of each order
    if math.isinf(p):
        return float(sum(np.max(piece) for piece in pieces))
    total = sum(grid.integrate(weight * piece**p, spec) for piece in pieces)
    return float(total ** (1.0 / p))


def tensor_norm_A(field, l, p, bundle=None):
    """H^{l,p} norm of A against the induced volume.

    Orders 0 through ``l`` contribute; ``l`` is 0 or 1.

    """
    if l not in (0, 1):
        raise ValueError("only l = 0 or 1 is supported, got {!r}".format(l))
    _check_p(p)
    if bundle is None:
        bundle = geometry_bundle(field)
    pieces = [np.sqrt(np.maximum(bundle.curvature.A_normsq, 0.0))]
    if l == 1:
        pieces.append(np.sqrt(np.maximum(grad_A_normsq(bundle), 0.0)))
    return _integral_norm(pieces, bundle.metric.sqrt_det, field.spec, p)


def _ordered_tuple_counts(d, order):
    "Multi-index of every ordered index tuple, with multiplicities."
    counts = collections.Counter()
    for tup in itertools.product(range(d), repeat=order):
        counts[tuple(tup.count(axis) for axis in range(d))] += 1
    return counts


def flat_derivative_normsq(field, order):
    "Pointwise sum over ordered tuples and components of |D^order u|^2."
    spec = field.spec
    counts = _ordered_tuple_counts(spec.d, order)
    u = np.stack([field.u1, field.u2])
    indices = sorted(counts)
    parts = grid.derivatives(u, spec, indices)
    total = np.zeros(spec.shape)
    for alpha, part in zip(indices, parts):
        total += counts[alpha] * np.sum(part**2, axis=0)
    return total


def d2u_norm(field, l, p):
    "Euclidean W^{l,p} norm of the Hessian of (u1, u2), orders 0 to l."
    if l not in (0, 1, 2):
        raise ValueError("d2u_norm supports l <= 2, got {!r}".format(l))
    _check_p(p)
    pieces = [np.sqrt(flat_derivative_normsq(field, k + 2)) for k in range(l + 1)]
    return _integral_norm(pieces, 1.0, field.spec, p)


def induced_volume(field, metric=None):
    "Integral of sqrt(det g) over the box."
    if metric is None:
        metric = assemble_metric(field)
    return float(grid.integrate(metric.sqrt_det, field.spec))
