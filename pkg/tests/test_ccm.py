import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccmtune import RgbImage
from ccmtune.ccm import CcmMatrix, CcmParams, apply, materialize, matrix_from_json, matrix_to_json, project, pullback
from ccmtune.errors import DimensionMismatchError, MatrixFormatError

from conftest import random_image

phi_values = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
phi_vectors = st.lists(phi_values, min_size=6, max_size=6)


class TestMaterialize:

    def test_zero_params_identity(self):
        m = materialize(CcmParams.zeros())
        assert np.array_equal(m.m, np.eye(3))

    def test_row_one_deviations(self):
        params = CcmParams([0.1, 0.1, 0, 0, 0, 0])
        m = materialize(params).m
        assert np.allclose(m[0], [0.8, 0.1, 0.1])
        assert np.array_equal(m[1], [0, 1, 0])
        assert np.array_equal(m[2], [0, 0, 1])

    def test_negative_deviation_row_two(self):
        m = materialize(CcmParams([0, 0, -0.05, 0, 0, 0])).m
        assert np.allclose(m[1], [-0.05, 1.05, 0.0])

    def test_rows_always_sum_to_one(self, rng):
        for _ in range(100):
            params = CcmParams(rng.uniform(-1, 1, 6))
            sums = materialize(params).row_sums()
            assert np.max(np.abs(sums - 1.0)) < 1e-9


class TestApply:

    def test_identity_matrix_bit_identical(self, rng):
        img = random_image(rng, 13, 7)
        out = apply(CcmMatrix(np.eye(3)), img)
        assert np.array_equal(out.samples, img.samples)

    def test_row_dot_product(self):
        img = RgbImage(np.array([1.0, 0.0, 0.0]).reshape(3, 1, 1))
        m = CcmMatrix(np.array([[0.8, 0.1, 0.1], [0, 1, 0], [0, 0, 1]]))
        out = apply(m, img)
        assert out.samples[0, 0, 0] == pytest.approx(0.8, abs=1e-15)

    def test_white_fixed_point(self, rng):
        img = RgbImage.constant((1.0, 1.0, 1.0), 5, 5)
        for _ in range(20):
            params = project(CcmParams(rng.uniform(-1, 1, 6)))
            out = apply(materialize(params), img)
            assert np.max(np.abs(out.samples - 1.0)) < 1e-12

    def test_no_clamping(self):
        img = RgbImage(np.array([1.0, 1.0, 0.0]).reshape(3, 1, 1))
        m = CcmMatrix(np.array([[1.5, -0.25, -0.25], [0, 1, 0], [0, 0, 1]]))
        assert apply(m, img).samples[0, 0, 0] == pytest.approx(1.25)


class TestProject:

    def test_row_pair_rescaled(self):
        out = project(CcmParams([0.2, 0.2, 0, 0, 0, 0]))
        assert np.allclose(out.off_diag[:2], [0.125, 0.125])

    def test_inside_feasible_set_unchanged(self):
        params = CcmParams([0.1, -0.1, 0.05, 0.05, 0, 0.2])
        assert np.array_equal(project(params).off_diag, params.off_diag)

    def test_clamp_then_row_check(self):
        out = project(CcmParams([0.4, -0.4, 0, 0, 0, 0]))
        assert np.allclose(out.off_diag[:2], [0.25, -0.25])

    @settings(max_examples=300, deadline=None)
    @given(phi_vectors)
    def test_projection_feasible_and_idempotent(self, vec):
        params = CcmParams(vec)
        once = project(params)
        assert once.is_feasible()
        twice = project(once)
        assert np.array_equal(twice.off_diag, once.off_diag)

    def test_many_random_draws_feasible(self):
        rng = np.random.default_rng(99)
        for _ in range(2000):
            tau = float(rng.uniform(0.05, 1.5))
            params = CcmParams(rng.uniform(-3, 3, 6), tau)
            projected = project(params)
            assert projected.is_feasible()
            assert np.max(np.abs(materialize(projected).row_sums() - 1.0)) < 1e-9


class TestPullback:

    def test_zero_cotangent(self, rng):
        img = random_image(rng, 4, 4)
        zero = RgbImage(np.zeros((3, 4, 4)))
        assert np.array_equal(pullback(img, zero), np.zeros(6))

    def test_constant_image_zero_gradient(self, rng):
        img = RgbImage.constant((0.4, 0.4, 0.4), 6, 6)
        cot = random_image(rng, 6, 6)
        assert np.allclose(pullback(img, cot), 0.0)

    def test_single_pixel_hand_values(self):
        img = RgbImage(np.array([0.2, 0.5, 0.9]).reshape(3, 1, 1))
        cot = RgbImage(np.array([1.0, 0.0, 0.0]).reshape(3, 1, 1))
        grads = pullback(img, cot)
        # d/d phi_12 = 0.5 - 0.2, d/d phi_13 = 0.9 - 0.2, others zero
        assert grads[0] == pytest.approx(0.3)
        assert grads[1] == pytest.approx(0.7)
        assert np.allclose(grads[2:], 0.0)

    def test_matches_central_differences(self, rng):
        h = 1e-5
        for _ in range(100):
            img = random_image(rng, 8, 8)
            cot = RgbImage(rng.standard_normal((3, 8, 8)))
            phi = rng.uniform(-0.3, 0.3, 6)
            grads = pullback(img, cot)
            for k in range(6):
                e = np.zeros(6)
                e[k] = h
                up = np.sum(cot.samples * apply(materialize(CcmParams(phi + e)), img).samples)
                dn = np.sum(cot.samples * apply(materialize(CcmParams(phi - e)), img).samples)
                fd = (up - dn) / (2 * h)
                assert abs(fd - grads[k]) / max(abs(fd), 1e-9) < 1e-6

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            pullback(random_image(rng, 4, 4), random_image(rng, 5, 4))


class TestCommutation:

    def test_apply_commutes_with_resize(self, rng):
        from ccmtune import resize_bilinear
        for _ in range(20):
            img = random_image(rng, 37, 23)
            params = project(CcmParams(rng.uniform(-0.5, 0.5, 6)))
            m = materialize(params)
            a = resize_bilinear(apply(m, img), 16, 11).samples
            b = apply(m, resize_bilinear(img, 16, 11)).samples
            assert np.max(np.abs(a - b)) < 1e-6


class TestMatrixJson:

    def test_round_trip(self):
        params = project(CcmParams([0.1, -0.05, 0.2, 0.02, -0.1, 0.03]))
        m = materialize(params)
        text = matrix_to_json(m, params)
        doc = json.loads(text)
        assert doc["version"] == 1
        assert set(doc["phi"]) == {"12", "13", "21", "23", "31", "32"}
        assert doc["tau"] == params.tau
        parsed = matrix_from_json(text)
        assert np.array_equal(parsed.m, m.m)

    def test_row_sum_violation_rejected(self):
        bad = json.dumps({"version": 1, "matrix": [[1.1, 0, 0], [0, 1, 0], [0, 0, 1]]})
        with pytest.raises(MatrixFormatError):
            matrix_from_json(bad)

    def test_malformed_rejected(self):
        for text in ("not json", "[]", json.dumps({"matrix": [[1, 0], [0, 1]]}),
                     json.dumps({"matrix": [["a", 0, 0], [0, 1, 0], [0, 0, 1]]})):
            with pytest.raises(MatrixFormatError):
                matrix_from_json(text)


class TestParamsInvariants:

    def test_rejects_bad_tau(self):
        with pytest.raises(ValueError):
            CcmParams(np.zeros(6), tau=0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            CcmParams([np.inf, 0, 0, 0, 0, 0])

    def test_feasibility_includes_row_caps(self):
        params = CcmParams([0.2, 0.2, 0, 0, 0, 0], tau=0.25)
        assert not params.is_feasible()
        assert project(params).is_feasible()
