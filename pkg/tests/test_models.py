import numpy as np
import pytest

from nclyap.models import (
    blowup_construction,
    build_blowup_example,
    build_l2_block_model,
    build_linear,
    build_scalar_example,
    build_switched_linear,
    build_ugatt_example,
    evolve,
    model_from_descriptor,
)
from nclyap.systems import DisturbanceSignal, flow

from _oracles import exact_lambda_min_normalized


class TestScalarExamples:
    def test_variant_ii_closed_form(self):
        model = build_scalar_example("ii")
        traj = flow(model, 1.0, [1.0], DisturbanceSignal.constant(2.0), step=1e-3)
        assert traj.final_state[0] == pytest.approx(np.exp(2.0), abs=1e-7)

    def test_variant_i_equilibrium(self):
        model = build_scalar_example("i")
        traj = flow(model, 2.0, [0.0], DisturbanceSignal.constant(5.0))
        assert np.all(traj.states == 0.0)

    def test_variant_iv_growth_at_zero_disturbance(self):
        model = build_scalar_example("iv")
        traj = flow(model, 1.0, [1.0], DisturbanceSignal.constant(0.0), step=1e-3)
        assert traj.final_state[0] == pytest.approx(np.e, abs=1e-7)

    def test_variant_iii_kink_active_above_one(self):
        model = build_scalar_example("iii")
        lo = model.rhs(np.array([0.5]), 10.0)[0]
        hi = model.rhs(np.array([1.5]), 10.0)[0]
        assert lo == pytest.approx(0.5 / 11.0)
        assert hi == pytest.approx(1.5 / 11.0 + 10.0 * 0.5)

    def test_rejects_unknown_variant(self):
        with pytest.raises(ValueError):
            build_scalar_example("v")


class TestUgattExample:
    def test_origin_stays(self):
        model = build_ugatt_example()
        traj = flow(model, 1.0, [0.0, 0.0], DisturbanceSignal.constant(7.0))
        assert np.all(traj.states == 0.0)

    def test_y_hits_zero_in_finite_time(self):
        model = build_ugatt_example()
        traj = flow(model, 2.0, [0.0, 1.0], DisturbanceSignal.constant(0.0), step=2e-5)
        idx = np.searchsorted(traj.times, 1.9)
        assert abs(traj.states[idx, 1]) <= 1e-6

    def test_transient_grows_with_disturbance_strength(self):
        model = build_ugatt_example()
        peaks = []
        for K in (10.0, 100.0):
            traj = flow(model, 2.0, [1.0, 1.0], DisturbanceSignal.constant(K), step=1e-4)
            peaks.append(np.abs(traj.states[:, 0]).max())
        assert peaks[1] > peaks[0] > 1.0


class TestBlowupExample:
    def test_rejects_bad_c(self):
        with pytest.raises(ValueError):
            build_blowup_example(0.1)

    def test_escape_region(self):
        model, _ = build_blowup_example(3.0)
        for z0 in [(-1.0, 2.0), (-4.0, -2.0), (-2.5, 0.0)]:
            traj = flow(model, 12.0, np.array(z0), step=1e-2)
            assert traj.escaped is not None
            lo, hi = traj.escaped
            assert np.isfinite(lo) and np.isfinite(hi) and lo < hi

    def test_safe_region_converges(self):
        model, _ = build_blowup_example(3.0)
        traj = flow(model, 15.0, np.array([1.0, 1.0]), step=5e-3)
        assert traj.escaped is None
        assert model.norm(traj.final_state) < 0.01

    def test_origin_is_a_true_equilibrium(self):
        # the time reparametrization must not poison the field at 0
        model, cand = build_blowup_example(3.0)
        rhs0 = model.rhs(np.zeros(2), 0.0)
        assert np.all(np.isfinite(rhs0)) and np.all(rhs0 == 0.0)
        traj = flow(model, 1.0, np.zeros(2), step=1e-2)
        assert np.all(traj.states == 0.0)
        assert cand(np.zeros(2)) == 0.0

    def test_decay_rate_dominates_norm_outside_ball(self):
        # along the reparametrized field, dV <= -||z|| for ||z|| >= 2
        data = blowup_construction(3.0)
        rng = np.random.default_rng(0)
        for _ in range(500):
            th = rng.uniform(0, 2 * np.pi)
            r = rng.uniform(2.0, 8.0)
            z = np.array([r * np.cos(th), r * np.sin(th)])
            vdot = float(data.h(z) * data.vdot_along_F(z))
            assert vdot <= -np.linalg.norm(z) + 1e-9

    def test_candidate_positive_and_bounded(self):
        _, cand = build_blowup_example(3.0)
        rng = np.random.default_rng(1)
        zs = rng.normal(scale=3.0, size=(500, 2))
        for z in zs:
            v = cand(z)
            assert 0.0 < v < 3.0 or np.allclose(z, 0)
            assert v <= cand.psi2(np.linalg.norm(z)) + 1e-12

    def test_noncoercivity_inf_collapses_left(self):
        # V approaches 1 + (2/pi) arctan(z2) as z1 -> -inf: inf over large
        # spheres stays bounded while the sup stays near 3
        _, cand = build_blowup_example(3.0)
        for R in (5.0, 10.0, 50.0):
            vals = [cand(np.array([-np.sqrt(R**2 - z2**2), z2]))
                    for z2 in np.linspace(-0.9 * R, 0.9 * R, 101)]
            assert min(vals) < 1.2
        # but psi1-style growth fails: inf does not grow with R
        assert cand.psi1 is None


class TestL2BlockModel:
    def test_block_shapes_and_eigs(self):
        block = build_l2_block_model(5, 0.0)
        for i, A in enumerate(block.blocks, 1):
            assert A.shape == (i, i)
            np.testing.assert_allclose(np.linalg.eigvals(A).real, -1.0, atol=1e-12)

    def test_operator_norm_below_two(self):
        block = build_l2_block_model(40, 0.0)
        for A in block.blocks:
            assert np.linalg.norm(A, 2) <= 2.0

    def test_lyapunov_inequality_strict(self):
        block = build_l2_block_model(8, 0.0)
        for A, P in zip(block.blocks, block.lyapunov_blocks):
            Q = A.T @ P + P @ A + P
            assert np.linalg.eigvalsh(Q).max() < 0
            assert np.linalg.norm(P, 2) == pytest.approx(1.0, abs=1e-12)

    def test_lambda_min_matches_exact_oracle(self):
        block = build_l2_block_model(12, 0.0)
        lam = block.lambda_mins()
        for i in (1, 4, 8, 12):
            assert lam[i - 1] == pytest.approx(exact_lambda_min_normalized(i), rel=1e-6)

    def test_lambda_min_strictly_decreasing_oracle(self):
        vals = [exact_lambda_min_normalized(i) for i in range(1, 31)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[29] < 0.05

    def test_v_decays_like_exp_minus_t(self):
        block = build_l2_block_model(12, 0.0)
        model, cand = block.system, block.candidate
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.normal(size=model.dim)
            v0 = cand(x)
            for t in (0.5, 1.0, 2.0):
                traj = flow(model, t, x, step=1e-2)
                assert cand(traj.final_state) <= np.exp(-t) * v0 * 1.001

    def test_epsilon_variant_decay_and_instability(self):
        block = build_l2_block_model(25, 0.25)
        model, cand = block.system, block.candidate
        wit = block.singular_direction(6.0)
        traj = flow(model, 6.0, wit, step=1e-2)
        growth = model.norm(traj.final_state)
        assert growth > 1.0  # exponential instability witness
        v0 = cand(wit)
        assert cand(traj.final_state) <= np.exp((2 * 0.25 - 1) * 6.0) * v0 * 1.001

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            build_l2_block_model(3, 0.7)


class TestSwitchedLinear:
    def test_single_mode_no_switch(self):
        from scipy.linalg import expm

        A = np.array([[-1.0, 1.0], [0.0, -2.0]])
        sw = build_switched_linear([A])
        d = DisturbanceSignal.constant(0)
        np.testing.assert_allclose(evolve(sw, d, 1.5), expm(A * 1.5), atol=1e-12)

    def test_two_modes_one_switch(self):
        from scipy.linalg import expm

        A0 = np.array([[-1.0, 0.0], [1.0, -1.0]])
        A1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
        sw = build_switched_linear([A0, A1])
        d = DisturbanceSignal((0.0, 0.6), (0, 1))
        got = evolve(sw, d, 1.0)
        want = expm(A1 * 0.4) @ expm(A0 * 0.6)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_empty_interval_is_identity(self):
        sw = build_switched_linear([np.zeros((2, 2))])
        d = DisturbanceSignal.constant(0)
        np.testing.assert_allclose(evolve(sw, d, 2.0, 2.0), np.eye(2))

    def test_cocycle_identity_random_partitions(self):
        rng = np.random.default_rng(4)
        A0 = rng.normal(size=(3, 3)) * 0.5
        A1 = rng.normal(size=(3, 3)) * 0.5
        sw = build_switched_linear([A0, A1])
        for _ in range(10):
            bps = np.sort(rng.uniform(0.1, 2.9, 3))
            d = DisturbanceSignal((0.0, *bps), tuple(int(v) for v in rng.integers(2, size=4)))
            t, r, s = 3.0, float(rng.uniform(1.0, 2.0)), 0.5
            full = evolve(sw, d, t, s)
            split = evolve(sw, d, t, r) @ evolve(sw, d, r, s)
            np.testing.assert_allclose(full, split, atol=1e-10)

    def test_mode_index_validation(self):
        sw = build_switched_linear([np.zeros((2, 2))])
        d = DisturbanceSignal.constant(3)
        with pytest.raises(ValueError):
            evolve(sw, d, 1.0)

    def test_flow_uses_exact_propagator(self):
        A0 = np.array([[-1.0]])
        A1 = np.array([[-3.0]])
        sw = build_switched_linear([A0, A1])
        d = DisturbanceSignal((0.0, 0.5), (0, 1))
        traj = flow(sw.system, 1.0, [2.0], d, step=0.1)
        assert traj.final_state[0] == pytest.approx(2.0 * np.exp(-0.5) * np.exp(-1.5), abs=1e-12)


class TestDescriptors:
    def test_roundtrip_all_kinds(self):
        descriptors = [
            {"kind": "scalar_example", "variant": "ii"},
            {"kind": "ugatt"},
            {"kind": "blowup", "c": 3.0},
            {"kind": "l2_block", "n": 3, "epsilon": 0.0},
            {"kind": "linear", "a": [[-1.0]]},
            {"kind": "switched_linear", "modes": [[[-1.0]], [[-2.0]]]},
        ]
        for desc in descriptors:
            model = model_from_descriptor(desc)
            assert model.meta["kind"] == desc["kind"]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            model_from_descriptor({"kind": "nope"})
