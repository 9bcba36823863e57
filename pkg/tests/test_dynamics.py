import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from dmtopo.algebra import bloch_vector
from dmtopo.dynamics import (
    CorrelationField,
    InitialStateSpec,
    Trajectory,
    bloch_momenta,
    evolve_bloch_ode,
    evolve_propagator,
    evolve_realspace_oracle,
    evolve_spectral,
    expm,
    from_bloch,
    initial_state,
    steady_direction,
    to_bloch,
)
from dmtopo.errors import DefectiveBlock, DimensionMismatch, InvalidParameter, NotPTForm
from dmtopo.model import BlochBlock, bloch_blocks, build_ssh_model, chiral_axis, kgrid
from dmtopo.topology import check_chiral


def _ssh(u, w, lam, n_k=64):
    return bloch_blocks(build_ssh_model(u, w, lam, 2), n_k)


def _C0(n_k=64, a=1.0, b=2.0):
    return initial_state(InitialStateSpec(a, b), kgrid(n_k))


def _diff(A, B):
    return float(np.max(np.abs(A.blocks - B.blocks)))


class TestInitialState:
    def test_k_equals_pi(self):
        C = initial_state(InitialStateSpec(1, 2), [np.pi])
        np.testing.assert_allclose(C.blocks[0], np.diag([0.5 * (1 + np.tanh(1)), 0.5 * (1 - np.tanh(1))]), atol=1e-15)
        np.testing.assert_allclose(np.diag(C.blocks[0]).real, [0.880797, 0.119203], atol=1e-6)

    @given(st.floats(0.01, 5), st.floats(0.01, 5))
    def test_unit_trace_and_physical(self, a, b):
        C = _C0(32, a, b)
        np.testing.assert_allclose(np.trace(C.blocks, axis1=1, axis2=2), 1, atol=1e-15)
        assert C.is_physical()

    def test_antiparallel_to_n_k(self):
        ks = kgrid(64)
        n_k = np.stack([0 * ks, 2 * np.sin(ks), 1 + 2 * np.cos(ks)], axis=-1)
        _, n_C = _C0(64).pauli()
        cos = np.sum(n_C * n_k, axis=-1) / np.linalg.norm(n_C, axis=-1) / np.linalg.norm(n_k, axis=-1)
        np.testing.assert_allclose(cos, -1, atol=1e-14)

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            InitialStateSpec(0, 2)
        with pytest.raises(InvalidParameter):
            InitialStateSpec(1, -2)


class TestPropagatorEngine:
    def test_t0(self):
        C0 = _C0()
        np.testing.assert_array_equal(evolve_propagator(_ssh(0.6, 0, 1), C0, 0.0).blocks, C0.blocks)

    def test_hopping_free_decay(self):
        # X~ = diag(0, -2 lam): C_AA frozen, C_AB ~ e^{-2 lam t}, C_BB ~ e^{-4 lam t}
        C0 = _C0()
        Ct = evolve_propagator(_ssh(0, 0, 1), C0, 0.7).blocks
        np.testing.assert_allclose(Ct[:, 0, 0], C0.blocks[:, 0, 0], atol=1e-15)
        np.testing.assert_allclose(Ct[:, 0, 1], C0.blocks[:, 0, 1] * np.exp(-1.4), atol=1e-15)
        np.testing.assert_allclose(Ct[:, 1, 1], C0.blocks[:, 1, 1] * np.exp(-2.8), atol=1e-15)

    def test_unitary_limit_preserves_spectrum(self):
        C0 = _C0()
        Ct = evolve_propagator(_ssh(0.8, 0.3, 0), C0, 5.0)
        np.testing.assert_allclose(Ct.spectra(), C0.spectra(), atol=1e-13)

    def test_grid_mismatch(self):
        with pytest.raises(DimensionMismatch):
            evolve_propagator(_ssh(0.6, 0, 1, 32), _C0(64), 1.0)

    def test_trace_decreases(self):
        blocks, C0 = _ssh(0.6, 0.2, 1), _C0()
        occ = [evolve_propagator(blocks, C0, t).total_occupation() for t in np.linspace(0, 10, 41)]
        assert np.all(np.diff(occ) < 0)

    def test_trace_derivative(self):
        # d Tr C / dt = -2 Tr(M C) with M = diag(0, 2 lam) per k
        blocks, C0 = _ssh(0.6, 0.2, 1), _C0()
        t, h = 1.3, 1e-5
        d = (evolve_propagator(blocks, C0, t + h).total_occupation()
             - evolve_propagator(blocks, C0, t - h).total_occupation()) / (2 * h)
        Ct = evolve_propagator(blocks, C0, t).blocks
        assert d == pytest.approx(-2 * np.mean(2 * Ct[:, 1, 1].real), rel=1e-7)

    def test_physical_and_chiral_along_trajectory(self):
        for u, w in [(0.6, 0), (1.3, 0), (2, 0.2), (0.2, 0.5)]:
            blocks, C0 = _ssh(u, w, 1, 128), _C0(128)
            frame = chiral_axis(blocks)
            for t in np.linspace(0, 20, 21):
                Ct = evolve_propagator(blocks, C0, t)
                s = Ct.spectra()
                assert s.min() >= -1e-7 and s.max() <= 1 + 1e-7
                assert check_chiral(Ct, frame).ok

    def test_broken_flat_band_period(self):
        # flat band, u > lam: n_C rotates with angular frequency 2 sqrt(u^2 - lam^2)
        u = 1.3
        T = np.pi / np.sqrt(u**2 - 1)
        blocks, C0 = _ssh(u, 0, 1), _C0()
        for t in (0.4, 1.7):
            A = evolve_propagator(blocks, C0, t).blocks
            B = evolve_propagator(blocks, C0, t + T).blocks
            np.testing.assert_allclose(B, A * np.exp(-2 * T), atol=1e-13)


class TestSpectralEngine:
    def test_t0_completeness(self):
        blocks, C0 = _ssh(0.6, 0.2, 1), _C0()
        np.testing.assert_allclose(evolve_spectral(blocks, C0, 0.0).blocks, C0.blocks, atol=1e-13)

    @pytest.mark.parametrize("u, w", [(0.6, 0), (0.2, 0.5), (1.3, 0.2), (2.5, 0.5)])
    def test_agrees_with_propagator(self, u, w):
        blocks, C0 = _ssh(u, w, 1), _C0()
        for t in (0.3, 1.0, 4.0):
            assert _diff(evolve_spectral(blocks, C0, t), evolve_propagator(blocks, C0, t)) < 1e-9

    def test_random_blocks(self, rng):
        ks = kgrid(16)
        H = rng.normal(size=(16, 2, 2)) + 1j * rng.normal(size=(16, 2, 2))
        H = H + np.conj(np.swapaxes(H, 1, 2))
        G = rng.normal(size=(16, 2, 2)) + 1j * rng.normal(size=(16, 2, 2))
        M = np.conj(np.swapaxes(G, 1, 2)) @ G
        blocks = [BlochBlock(k, h, m) for k, h, m in zip(ks, H, M)]
        C0 = initial_state(InitialStateSpec(1, 2), ks)
        assert _diff(evolve_spectral(blocks, C0, 1.0), evolve_propagator(blocks, C0, 1.0)) < 1e-9

    def test_long_time_direction(self):
        # unbroken sector: C(t) -> |R+><R+| <L+|C0|L+> e^{2 eps+ t}
        blocks, C0 = _ssh(0.2, 0.5, 1), _C0()
        t = 40.0
        Ct = evolve_spectral(blocks, C0, t)
        for b, Ck in zip(blocks[::7], Ct.blocks[::7]):
            v = bloch_vector(Ck)
            v = v / np.linalg.norm(v)
            np.testing.assert_allclose(v, steady_direction(b), atol=1e-6)

    def test_defective(self):
        with pytest.raises(DefectiveBlock):
            evolve_spectral(_ssh(1, 0, 1), _C0(), 1.0)


class TestBlochODE:
    def test_matches_propagator(self):
        blocks, C0 = _ssh(0.6, 0, 1, 256), _C0(256)
        times = np.linspace(0, 10, 11)
        traj = evolve_bloch_ode(blocks, C0, times)
        for t, field in zip(times, traj.fields):
            assert field.time == t
            assert _diff(field, evolve_propagator(blocks, C0, t)) < 1e-6

    def test_zero_blocks_constant(self):
        ks = kgrid(8)
        blocks = [BlochBlock(k, np.zeros((2, 2)), np.zeros((2, 2))) for k in ks]
        C0 = initial_state(InitialStateSpec(1, 2), ks)
        traj = evolve_bloch_ode(blocks, C0, [0.0, 1.0, 5.0])
        for f in traj.fields:
            np.testing.assert_allclose(f.blocks, C0.blocks, atol=1e-15)

    def test_stays_in_chiral_plane(self):
        blocks, C0 = _ssh(1.3, 0.2, 1), _C0()
        frame = chiral_axis(blocks)
        for f in evolve_bloch_ode(blocks, C0, np.linspace(0.5, 10, 20)).fields:
            assert check_chiral(f, frame).max_axis_component < 1e-12

    def test_rejects_non_pt_form(self):
        ks = kgrid(8)
        # Re n_X parallel to Im n_X
        M = np.broadcast_to(np.array([[1, 0.5], [0.5, 1]]), (8, 2, 2))
        H = np.broadcast_to(np.array([[0, 1], [1, 0]]), (8, 2, 2))
        blocks = [BlochBlock(k, h, m) for k, h, m in zip(ks, H, M)]
        with pytest.raises(NotPTForm):
            evolve_bloch_ode(blocks, initial_state(InitialStateSpec(), ks), [1.0])

    def test_bad_times(self):
        blocks, C0 = _ssh(0.6, 0, 1), _C0()
        with pytest.raises(ValueError):
            evolve_bloch_ode(blocks, C0, [1.0, 0.5])
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 0.0]), ())


class TestRealSpaceOracle:
    def test_t0(self):
        m = build_ssh_model(0.6, 0, 1, 4)
        C = np.eye(8) * 0.3
        np.testing.assert_array_equal(evolve_realspace_oracle(m, C, 0.0), C)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            evolve_realspace_oracle(build_ssh_model(0.6, 0, 1, 4), np.eye(6), 1.0)

    @pytest.mark.parametrize("L, u, w", [(4, 0.6, 0.0), (8, 1.3, 0.2), (5, 0.4, 0.3)])
    def test_block_diagonal_and_equal(self, L, u, w):
        m = build_ssh_model(u, w, 1, L)
        ks = bloch_momenta(L)
        C0 = initial_state(InitialStateSpec(1, 2), ks)
        # stored blocks are C_k^T; the real-space C is the transpose of their assembly
        C_real = from_bloch(C0.blocks, L).T
        Ct = evolve_realspace_oracle(m, C_real, 2.0)
        _, blocks, off = to_bloch(Ct.T, L)
        assert off < 1e-12
        ref = evolve_propagator(bloch_blocks(m, 0, ks=ks), C0, 2.0).blocks
        np.testing.assert_allclose(blocks, ref, atol=1e-8)

    def test_real_space_trace_decreases(self, rng):
        m = build_ssh_model(0.9, 0.4, 0.7, 4)
        A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        C = A @ A.conj().T
        C = C / (1.01 * np.linalg.eigvalsh(C).max())
        tr = [np.trace(evolve_realspace_oracle(m, C, t)).real for t in np.linspace(0, 3, 13)]
        assert np.all(np.diff(tr) < 0)

    def test_bloch_round_trip(self, rng):
        blocks = rng.normal(size=(6, 2, 2)) + 1j * rng.normal(size=(6, 2, 2))
        _, back, off = to_bloch(from_bloch(blocks, 6), 6)
        np.testing.assert_allclose(back, blocks, atol=1e-13)
        assert off < 1e-13


class TestExpm:
    @pytest.mark.parametrize("scale", [0.01, 1.0, 30.0])
    def test_against_scipy(self, rng, scale):
        A = scale * (rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10)))
        ref = scipy.linalg.expm(A)
        np.testing.assert_allclose(expm(A), ref, rtol=1e-9, atol=1e-12 * np.max(np.abs(ref)))

    def test_zero(self):
        np.testing.assert_allclose(expm(np.zeros((3, 3))), np.eye(3), atol=1e-15)


class TestSteadyDirection:
    def test_unbroken_in_plane(self):
        for b in _ssh(0.2, 0, 1, 16):
            v = steady_direction(b)
            assert v is not None
            assert np.linalg.norm(v) == pytest.approx(1)
            assert abs(v[0]) < 1e-12

    def test_broken_is_none(self):
        assert all(steady_direction(b) is None for b in _ssh(2, 0, 1, 16))

    def test_ep_is_none(self):
        assert all(steady_direction(b) is None for b in _ssh(1, 0, 1, 16))

    def test_diagonal(self):
        b = BlochBlock(0.0, np.zeros((2, 2)), np.diag([0, 2.0]))
        np.testing.assert_allclose(steady_direction(b), [0, 0, 1])


def test_correlation_field_helpers():
    C = CorrelationField(kgrid(8), np.broadcast_to(0.5 * np.eye(2), (8, 2, 2)).copy())
    assert C.total_occupation() == pytest.approx(1)
    assert C.hermiticity_error() == 0
    alpha, n = C.pauli()
    np.testing.assert_allclose(alpha, 0.5)
    np.testing.assert_allclose(n, 0)
    bad = CorrelationField(C.kgrid, 1.5 * C.blocks * 2)
    assert not bad.is_physical()
