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

import numpy as np
from scipy import integrate

from smcflab import geometry, grid
from smcflab.tests import base


class TestFlatPlane(base.TestCase):
    def setUp(self):
        super().setUp()
        self.spec = base.periodic(2, 16)
        self.bundle = geometry.geometry_bundle(grid.Field.zeros(self.spec))

    def test_metric(self):
        eye = np.eye(2).reshape(2, 2, 1, 1)
        self.assertArrayClose(self.bundle.metric.g, eye)
        self.assertArrayClose(self.bundle.metric.ginv, eye)
        self.assertArrayClose(self.bundle.metric.sqrt_det, 1.0)

    def test_frame(self):
        nu1, nu2 = self.bundle.frame.normals
        self.assertArrayClose(nu1, np.array([0, 0, -1, 0]).reshape(4, 1, 1))
        self.assertArrayClose(nu2, np.array([0, 0, 0, -1]).reshape(4, 1, 1))
        self.assertArrayClose(self.bundle.frame.lam, 1.0)

    def test_curvature(self):
        curvature = self.bundle.curvature
        self.assertArrayClose(curvature.A, 0.0)
        self.assertArrayClose(curvature.H, 0.0)
        self.assertArrayClose(curvature.JH, 0.0)
        self.assertArrayClose(curvature.A_normsq, 0.0)
        self.assertArrayClose(self.bundle.gamma, 0.0)
        self.assertArrayClose(geometry.grad_A_normsq(self.bundle), 0.0)

    def test_volume(self):
        field = grid.Field.zeros(self.spec)
        self.assertAlmostEqual((2 * math.pi) ** 2, geometry.induced_volume(field))

    def test_norms(self):
        field = grid.Field.zeros(self.spec)
        self.assertEqual(0.0, geometry.tensor_norm_A(field, 1, 2))
        self.assertEqual(0.0, geometry.tensor_norm_A(field, 0, np.inf))
        self.assertEqual(0.0, geometry.d2u_norm(field, 2, 2))


class TestMetric(base.TestCase):
    def test_point_value(self):
        # u1 = 0.1 sin x1 sin x2 at (pi/3, pi/2)
        du = np.array([[0.1 * 0.5 * 1.0, 0.0], [0.0, 0.0]])
        metric = geometry.metric_from_gradient(du)
        self.assertAlmostEqual(1.0025, metric.g[0, 0])
        self.assertAlmostEqual(0.0, metric.g[0, 1])
        self.assertAlmostEqual(1.0, metric.g[1, 1])
        self.assertAlmostEqual(1.0 / 1.0025, metric.ginv[0, 0])

    def test_spectral_gradient(self):
        spec = base.periodic(2, 32)
        x, y = spec.coordinates
        field = grid.Field(spec, 0.1 * np.sin(x) * np.sin(y))
        du = geometry.gradient(field)
        self.assertArrayClose(du[0, 0], 0.1 * np.cos(x) * np.sin(y))
        self.assertArrayClose(du[1, 0], 0.1 * np.sin(x) * np.cos(y))
        self.assertArrayClose(du[:, 1], 0.0)

    def test_inverse(self):
        for d in (1, 2, 3):
            with self.subTest(d=d):
                field = base.random_state(seed=d, amplitude=0.3, d=d, n=16)
                metric = geometry.assemble_metric(field)
                product = np.einsum("ij...,jk...->ik...", metric.g, metric.ginv)
                eye = np.eye(d).reshape((d, d) + (1,) * d)
                self.assertArrayClose(product, eye, atol=1e-13)

    def test_determinant(self):
        field = base.random_state(seed=4, amplitude=0.3)
        metric = geometry.assemble_metric(field)
        det = np.linalg.det(np.moveaxis(metric.g, (0, 1), (-2, -1)))
        self.assertArrayClose(metric.sqrt_det**2, det, atol=1e-13)

    def test_not_finite(self):
        du = np.full((2, 2), np.nan)
        self.assertRaises(geometry.GeometryError, geometry.metric_from_gradient, du)

    def test_flag_large_gradient(self):
        spec = base.periodic(1, 16)
        field = base.from_function(spec, lambda x: 2.0 * np.sin(x))
        with self.assertLogs("smcflab.geometry", level="WARNING"):
            metric = geometry.assemble_metric(field)
        self.assertTrue(metric.flagged)

    def test_christoffel_graph_identity(self):
        field = base.random_state(seed=2, amplitude=0.2)
        bundle = geometry.geometry_bundle(field)
        expected = np.einsum(
            "lm...,ija...,ma...->lij...", bundle.metric.ginv, bundle.d2u, bundle.du
        )
        self.assertArrayClose(bundle.gamma, expected, atol=1e-10)

    def test_volume_of_sine(self):
        spec = base.periodic(1, 32)
        field = base.from_function(spec, lambda x: 0.3 * np.sin(x))
        expected, _ = integrate.quad(
            lambda x: math.sqrt(1 + 0.09 * math.cos(x) ** 2), -math.pi, math.pi
        )
        self.assertAlmostEqual(expected, geometry.induced_volume(field), places=10)


class TestFrame(base.TestCase):
    def test_orthonormal_and_normal(self):
        for d in (1, 2, 3):
            with self.subTest(d=d):
                field = base.random_state(seed=10 + d, amplitude=0.4, d=d, n=16)
                bundle = geometry.geometry_bundle(field)
                nu1, nu2 = bundle.frame.normals
                self.assertArrayClose(np.sum(nu1 * nu1, axis=0), 1.0)
                self.assertArrayClose(np.sum(nu2 * nu2, axis=0), 1.0)
                self.assertArrayClose(np.sum(nu1 * nu2, axis=0), 0.0)
                for tangent in bundle.tangents:
                    self.assertArrayClose(np.sum(tangent * nu1, axis=0), 0.0)
                    self.assertArrayClose(np.sum(tangent * nu2, axis=0), 0.0)

    def test_nu1_has_no_last_component(self):
        field = base.random_state(seed=3)
        nu1 = geometry.normal_frame(field).nu1
        self.assertArrayClose(nu1[-1], 0.0)


class TestCurvature(base.TestCase):
    def test_sine_graph(self):
        eps = 0.2
        spec = base.periodic(1, 32)
        (x,) = spec.coordinates
        field = grid.Field(spec, eps * np.sin(x))
        bundle = geometry.geometry_bundle(field)
        expected = eps * np.sin(x) * (1 + eps**2 * np.cos(x) ** 2) ** -1.5
        self.assertArrayClose(bundle.curvature.mean[0], expected, atol=1e-12)
        self.assertArrayClose(bundle.curvature.mean[1], 0.0)

    def test_norm_of_A_on_a_line(self):
        field = base.random_state(seed=5, amplitude=0.3, d=1, n=32)
        curvature = geometry.geometry_bundle(field).curvature
        self.assertArrayClose(
            curvature.A_normsq, np.sum(curvature.mean**2, axis=0), atol=1e-13
        )

    def test_skew_mean_curvature_is_rotation(self):
        bundle = geometry.geometry_bundle(base.random_state(seed=6, amplitude=0.3))
        H = bundle.curvature.H
        JH = bundle.curvature.JH
        self.assertArrayClose(np.sum(H * JH, axis=0), 0.0)
        self.assertArrayClose(np.sum(JH * JH, axis=0), np.sum(H * H, axis=0))
        for tangent in bundle.tangents:
            self.assertArrayClose(np.sum(tangent * H, axis=0), 0.0)
            self.assertArrayClose(np.sum(tangent * JH, axis=0), 0.0)

    def test_shift_equivariance(self):
        field = base.random_state(seed=7, amplitude=0.3)
        shifted = field.with_values(np.roll(field.values, 3, axis=0))
        a = geometry.geometry_bundle(field).curvature.JH
        b = geometry.geometry_bundle(shifted).curvature.JH
        self.assertArrayClose(b, np.roll(a, 3, axis=1), atol=1e-12)

    def test_second_fundamental_form_from_parts(self):
        field = base.random_state(seed=8)
        metric = geometry.assemble_metric(field)
        frame = geometry.normal_frame(field)
        curvature = geometry.second_fundamental_form(field, frame, metric)
        bundle = geometry.geometry_bundle(field)
        self.assertArrayClose(curvature.A, bundle.curvature.A)

    def test_codazzi_symmetry(self):
        bundle = geometry.geometry_bundle(base.random_state(seed=9, amplitude=0.2))
        nabla = geometry.covariant_derivative_A(bundle)
        self.assertArrayClose(nabla, np.swapaxes(nabla, 1, 2), atol=1e-9)
        self.assertArrayClose(nabla, np.swapaxes(nabla, 2, 3), atol=1e-13)


class TestTensorNorms(base.TestCase):
    def test_invalid_orders(self):
        field = base.bump(16)
        self.assertRaises(ValueError, geometry.tensor_norm_A, field, 2, 2)
        self.assertRaises(ValueError, geometry.tensor_norm_A, field, 0, 1)
        self.assertRaises(ValueError, geometry.d2u_norm, field, 3, 2)

    def test_higher_order_adds(self):
        field = base.random_state(seed=11)
        self.assertGreater(
            geometry.tensor_norm_A(field, 1, 2), geometry.tensor_norm_A(field, 0, 2)
        )

    def test_sup_norm(self):
        field = base.random_state(seed=12)
        bundle = geometry.geometry_bundle(field)
        expected = math.sqrt(float(np.max(bundle.curvature.A_normsq)))
        self.assertAlmostEqual(
            expected, geometry.tensor_norm_A(field, 0, np.inf, bundle=bundle)
        )

    def test_flat_hessian_of_product(self):
        spec = base.periodic(2, 16)
        x, y = spec.coordinates
        field = grid.Field(spec, np.sin(x) * np.sin(y))
        expected = 2 * (np.sin(x) * np.sin(y)) ** 2 + 2 * (np.cos(x) * np.cos(y)) ** 2
        self.assertArrayClose(
            geometry.flat_derivative_normsq(field, 2), expected, atol=1e-12
        )
