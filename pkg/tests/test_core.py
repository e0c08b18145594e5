import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsewald.core import (KernelDomainError, KernelKind, ParameterError, SourceSystem,
                          direct_sum, eval_kernel, rms_error, self_interaction,
                          stresslet_strengths)

from .strategies import nonzero_vectors, strengths_for


def dense_matrix(kind, r):
    """Kernel as a (3, arity) matrix, built column by column from eval_kernel."""
    kind = KernelKind.coerce(kind)
    cols = [eval_kernel(kind, r, e) for e in np.eye(kind.arity)]
    return np.array(cols).T


class TestEvalKernel:
    def test_stokeslet_unit_x(self):
        np.testing.assert_allclose(eval_kernel("stokeslet", [1, 0, 0], [1, 0, 0]), [2, 0, 0])

    def test_stresslet_unit_x(self):
        f = np.zeros((3, 3))
        f[0, 0] = 1.0
        np.testing.assert_allclose(eval_kernel("stresslet", [1, 0, 0], f), [-6, 0, 0])

    def test_rotlet_unit_z(self):
        np.testing.assert_allclose(eval_kernel("rotlet", [0, 0, 1], [0, 1, 0]), [1, 0, 0])

    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_zero_separation_raises(self, kind):
        with pytest.raises(KernelDomainError):
            eval_kernel(kind, [0, 0, 0], np.ones(kind.arity))

    def test_wrong_arity(self):
        with pytest.raises(ParameterError):
            eval_kernel("stresslet", [1, 0, 0], [1, 0, 0])

    def test_stokeslet_matches_closed_form(self):
        r = np.array([0.3, -1.2, 0.7])
        rn = np.linalg.norm(r)
        S = np.eye(3) / rn + np.outer(r, r) / rn ** 3
        np.testing.assert_allclose(dense_matrix("stokeslet", r), S, rtol=1e-14)

    def test_stresslet_matches_closed_form(self):
        r = np.array([0.3, -1.2, 0.7])
        rn = np.linalg.norm(r)
        T = -6 * np.einsum("j,l,m->jlm", r, r, r) / rn ** 5
        np.testing.assert_allclose(dense_matrix("stresslet", r), T.reshape(3, 9), rtol=1e-14)


@settings(max_examples=1000, deadline=None)
@given(r=nonzero_vectors(), c=st.floats(0.1, 10.0))
def test_stokeslet_symmetry_and_scaling(r, c):
    S = dense_matrix("stokeslet", r)
    np.testing.assert_allclose(S, S.T, rtol=1e-12, atol=1e-14 * np.abs(S).max())
    np.testing.assert_allclose(dense_matrix("stokeslet", -r), S, rtol=1e-12)
    np.testing.assert_allclose(dense_matrix("stokeslet", c * r), S / c, rtol=1e-12,
                               atol=1e-14 * np.abs(S).max())


@settings(max_examples=1000, deadline=None)
@given(r=nonzero_vectors(), c=st.floats(0.1, 10.0))
def test_rotlet_antisymmetry_and_scaling(r, c):
    W = dense_matrix("rotlet", r)
    scale = np.abs(W).max()
    np.testing.assert_allclose(W, -W.T, atol=1e-13 * scale)
    np.testing.assert_allclose(dense_matrix("rotlet", -r), -W, atol=1e-13 * scale)
    np.testing.assert_allclose(dense_matrix("rotlet", c * r), W / c ** 2, rtol=1e-12,
                               atol=1e-13 * scale / c ** 2)


@settings(max_examples=1000, deadline=None)
@given(r=nonzero_vectors(), c=st.floats(0.1, 10.0))
def test_stresslet_full_symmetry_and_scaling(r, c):
    T = dense_matrix("stresslet", r).reshape(3, 3, 3)
    scale = np.abs(T).max()
    for perm in [(0, 2, 1), (1, 0, 2), (2, 1, 0), (1, 2, 0), (2, 0, 1)]:
        np.testing.assert_allclose(T, T.transpose(perm), atol=1e-13 * scale)
    np.testing.assert_allclose(dense_matrix("stresslet", -r).reshape(3, 3, 3), -T,
                               atol=1e-13 * scale)
    np.testing.assert_allclose(dense_matrix("stresslet", c * r).reshape(3, 3, 3), T / c ** 2,
                               rtol=1e-12, atol=1e-13 * scale / c ** 2)


class TestDirectSum:
    def test_two_stokeslets(self):
        s = SourceSystem([[0, 0, 0], [1, 0, 0]], [[1, 0, 0], [1, 0, 0]], 1.0)
        np.testing.assert_allclose(direct_sum(s), [[2, 0, 0], [2, 0, 0]])

    def test_single_source_empty_sum(self):
        s = SourceSystem([[0.5, 0.5, 0.5]], [[1, 2, 3]], 1.0)
        np.testing.assert_array_equal(direct_sum(s), [[0, 0, 0]])

    def test_coincident_sources_raise(self):
        s = SourceSystem([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]], np.ones((2, 3)), 1.0)
        with pytest.raises(KernelDomainError):
            direct_sum(s)

    def test_target_on_source_raises(self):
        s = SourceSystem([[0.5, 0.5, 0.5]], [[1, 0, 0]], 1.0)
        with pytest.raises(KernelDomainError):
            direct_sum(s, targets=[[0.5, 0.5, 0.5]])

    def test_exclude_self_needs_identical_targets(self):
        s = SourceSystem([[0.5, 0.5, 0.5]], [[1, 0, 0]], 1.0)
        with pytest.raises(ParameterError):
            direct_sum(s, targets=[[0.1, 0.5, 0.5]], exclude_self=True)

    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_matches_termwise_kernel_evaluation(self, kind, rng):
        x = rng.uniform(0, 1, (100, 3))
        f = rng.uniform(-1, 1, (100, kind.arity))
        s = SourceSystem(x, f, 1.0, kind)
        ref = np.zeros((100, 3))
        for m in range(100):
            for n in range(100):
                if n != m:
                    ref[m] += eval_kernel(kind, x[m] - x[n], f[n])
        np.testing.assert_allclose(direct_sum(s), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())

    def test_detached_targets(self, rng):
        x = rng.uniform(0, 1, (20, 3))
        f = rng.uniform(-1, 1, (20, 3))
        t = rng.uniform(0, 1, (5, 3))
        s = SourceSystem(x, f, 1.0)
        ref = np.array([sum(eval_kernel(0, ti - xn, fn) for xn, fn in zip(x, f)) for ti in t])
        np.testing.assert_allclose(direct_sum(s, targets=t), ref, rtol=1e-13)


@settings(max_examples=1000, deadline=None)
@given(data=st.data())
def test_direct_sum_linear_in_strengths(data):
    kind = data.draw(st.sampled_from(list(KernelKind)))
    n = data.draw(st.integers(2, 12))
    seed = data.draw(st.integers(0, 2 ** 32 - 1))
    a, b = data.draw(st.floats(-3, 3)), data.draw(st.floats(-3, 3))
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, (n, 3))
    f1 = rng.uniform(-1, 1, (n, kind.arity))
    f2 = rng.uniform(-1, 1, (n, kind.arity))
    u1 = direct_sum(SourceSystem(x, f1, 1.0, kind))
    u2 = direct_sum(SourceSystem(x, f2, 1.0, kind))
    u = direct_sum(SourceSystem(x, a * f1 + b * f2, 1.0, kind))
    scale = np.abs(u1).max() + np.abs(u2).max()
    np.testing.assert_allclose(u, a * u1 + b * u2, atol=1e-12 * scale * (1 + abs(a) + abs(b)))


class TestSourceSystem:
    def test_rejects_outside_box(self):
        with pytest.raises(ParameterError):
            SourceSystem([[1.5, 0, 0]], [[1, 0, 0]], 1.0)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ParameterError):
            SourceSystem([[0.5, 0, 0]], [[1, 0, 0], [1, 0, 0]], 1.0)

    def test_rejects_nonfinite_strength(self):
        with pytest.raises(ParameterError):
            SourceSystem([[0.5, 0, 0]], [[np.nan, 0, 0]], 1.0)

    def test_stresslet_tensor_input(self):
        s = SourceSystem([[0.5, 0.5, 0.5]], np.eye(3)[None], 1.0, "stresslet")
        assert s.strengths.shape == (1, 9)

    def test_q_is_sum_of_squares(self):
        s = SourceSystem([[0.5, 0.5, 0.5], [0.1, 0.1, 0.1]], [[1, 2, 3], [0, 0, 2]], 1.0)
        assert s.q == 18.0


def test_stresslet_strengths_outer_product():
    q = np.array([[1.0, 2.0, 3.0]])
    n = np.array([[0.0, 1.0, -1.0]])
    f = stresslet_strengths(q, n).reshape(3, 3)
    np.testing.assert_array_equal(f, np.outer(n[0], q[0]))


class TestSelfInteraction:
    def test_sqrt_pi_cancels(self):
        np.testing.assert_allclose(self_interaction(math.sqrt(math.pi), [1, 0, 0], "stokeslet"),
                                   [-4, 0, 0])

    def test_rotlet_zero(self):
        np.testing.assert_array_equal(self_interaction(1.0, [0, 1, 0], "rotlet"), [0, 0, 0])

    def test_stresslet_zero(self):
        np.testing.assert_array_equal(self_interaction(1.0, np.eye(3), "stresslet"), [0, 0, 0])

    def test_linear(self):
        np.testing.assert_allclose(self_interaction(2.0, [0, 1, 1], "stokeslet"),
                                   -8 / math.sqrt(math.pi) * np.array([0, 1, 1]))

    def test_batch_shape(self):
        assert self_interaction(1.0, np.ones((4, 3)), "stokeslet").shape == (4, 3)

    def test_rejects_nonpositive_xi(self):
        with pytest.raises(ParameterError):
            self_interaction(0.0, [1, 0, 0], "stokeslet")


class TestRmsError:
    def test_identical(self):
        u = np.arange(12.0).reshape(4, 3)
        assert rms_error(u, u) == 0.0

    def test_constant_offset_absolute(self):
        u = np.zeros((5, 3))
        du = np.tile([1.0, 0, 0], (5, 1))
        assert rms_error(u + du, u, relative=False) == 1.0

    def test_hand_computed(self, rng):
        u_ref = rng.normal(size=(10, 3))
        u = u_ref + rng.normal(scale=1e-3, size=(10, 3))
        err = math.sqrt(sum(((u[i] - u_ref[i]) ** 2).sum() for i in range(10)) / 10)
        ref = math.sqrt(sum((u_ref[i] ** 2).sum() for i in range(10)) / 10)
        assert rms_error(u, u_ref) == pytest.approx(err / ref, rel=1e-14)

    def test_zero_reference_guard(self):
        with pytest.raises(ZeroDivisionError):
            rms_error(np.ones((2, 3)), np.zeros((2, 3)))
