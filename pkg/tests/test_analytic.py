import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spmac import analytic as an
from spmac.analytic import (OneSenderScenario, SymmetricPovmParams, acc_info_one_sender, acc_info_grid,
                            acc_info_region1, acc_info_region1_displayed, acc_info_region3,
                            acc_info_two_sender_ternary, alpha_zero_max, best_mixture_value,
                            concave_envelope_at_half, extremal_holevo_bound, holevo_logn,
                            holevo_objective, holevo_one_sender_closed_form, holevo_transcendental,
                            j_one_sender, lemma_alpha_beta_scan, one_sender_ensemble,
                            optimize_one_sender, optimize_two_sender_ternary, region2_value,
                            stationarity_two_sender_ternary, tangent_condition, tangent_gap,
                            two_point_mixture_value)
from spmac.info_metrics import CqEnsemble, channel_mutual_information, flat_mutual_information, holevo_chi
from spmac.mac_builder import build_mac, encoded_states, one_sender_protocol, two_sender_ternary_protocol
from spmac.quantum_core import DensityOperator, NpeOperation, PureState, apply_npe, measure

LOG2_17_8 = np.log2(17 / 8)
Q15 = 15 / 17


def random_points(n, seed):
    rng = np.random.default_rng(seed)
    return [(float(rng.uniform(0.01, 0.99)), float(rng.uniform(0.01, np.pi / 2 - 0.01))) for _ in range(n)]


def measured_information(q, theta, povm):
    state, enc, _ = one_sender_protocol(theta, q)
    states = encoded_states(state, enc)
    channel = np.array([measure(povm, rho) for rho in states.values()])
    return flat_mutual_information(enc.senders[0].prior, channel)


class TestJ:
    @given(sigma=st.floats(0, 1), beta=st.floats(0, 2 * np.pi), theta=st.floats(0, np.pi / 2),
           alpha=st.floats(0, 2 * np.pi))
    def test_always_blocking_carries_nothing(self, sigma, beta, theta, alpha):
        assert j_one_sender(sigma, beta, OneSenderScenario(0.0, theta, alpha)) == pytest.approx(0, abs=1e-12)

    def test_equal_superposition_point(self):
        assert j_one_sender(0.5, np.pi, OneSenderScenario(Q15, np.pi / 4)) == pytest.approx(LOG2_17_8, abs=1e-12)

    @pytest.mark.parametrize("q,theta", random_points(20, 3))
    def test_matches_plus_minus_channel(self, q, theta):
        tm = build_mac(*one_sender_protocol(theta, q))
        mi = channel_mutual_information(tm, [(1 - q, q / 2, q / 2)])
        assert float(j_one_sender(0.5, np.pi, OneSenderScenario(q, theta))) == pytest.approx(mi, abs=1e-12)

    def test_sigma_range(self):
        with pytest.raises(ValueError):
            j_one_sender(1.5, 0.0, OneSenderScenario(0.5, 0.3))

    def test_scenario_range(self):
        with pytest.raises(ValueError):
            OneSenderScenario(1.2, 0.3)

    @pytest.mark.parametrize("q,theta", random_points(5, 11))
    def test_analytic_derivative(self, q, theta):
        c2 = np.cos(theta) ** 2
        s = np.linspace(0.05, 0.95, 7)
        h = 1e-6
        fd = (an._jt(s + h, q, c2) - an._jt(s - h, q, c2)) / (2 * h)
        assert np.allclose(an._djt(s, q, c2), fd, atol=1e-6)


class TestSymmetricPovm:
    def test_constraints(self):
        with pytest.raises(ValueError):
            SymmetricPovmParams((0.5, 0.5), (0.2, 0.2), (np.pi, np.pi))
        with pytest.raises(ValueError):
            SymmetricPovmParams((0.5, 0.6), (0.0, 1.0), (np.pi, np.pi))

    def test_unphysical_phase(self):
        p = SymmetricPovmParams((1.0,), (0.5,), (0.3,))
        assert abs(p.phase_constraint()) > 0.1
        with pytest.raises(ValueError):
            p.povm()

    def test_half_is_plus_minus(self):
        povm = SymmetricPovmParams((1.0,), (0.5,), (np.pi,)).povm()
        q, theta = 0.6, 0.9
        assert measured_information(q, theta, povm) == pytest.approx(float(acc_info_region3(q, theta)), abs=1e-12)

    def test_mixture_value(self):
        p = SymmetricPovmParams((0.5, 0.5), (0.0, 1.0), (np.pi, np.pi))
        sc = OneSenderScenario(0.4, 0.7)
        assert two_point_mixture_value(p, sc) == pytest.approx(float(acc_info_region1(0.4, 0.7)), abs=1e-12)


class TestRegimes:
    def test_equal_superposition(self):
        r = acc_info_one_sender(Q15, np.pi / 4)
        assert r.value_bits == pytest.approx(LOG2_17_8, abs=1e-12)
        assert r.regime == 3
        assert r.measurement.sigmas == (0.5,)

    def test_never_blocking_at_quarter_pi(self):
        assert acc_info_one_sender(1.0, np.pi / 4).value_bits == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
    def test_quarter_pi_closed_form(self, q):
        expected = 2 * q - 1 + float(an._h2((1 + q) / 2))
        assert float(acc_info_region3(q, np.pi / 4)) == pytest.approx(expected, abs=1e-12)

    def test_region1_displayed_is_lower(self):
        q, t = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0, np.pi / 2, 21))
        assert np.all(acc_info_region1_displayed(q, t) <= acc_info_region1(q, t) + 1e-15)

    @pytest.mark.parametrize("q,theta", random_points(20, 5))
    def test_constructive_agreement(self, q, theta):
        r = acc_info_one_sender(q, theta)
        assert measured_information(q, theta, r.measurement.povm()) == pytest.approx(r.value_bits, abs=1e-8)

    def test_holevo_dominance(self):
        qs = np.linspace(0, 1, 41)
        ts = np.linspace(0, np.pi / 2, 41)
        acc = acc_info_grid(qs, ts)
        for i, q in enumerate(qs):
            for j, t in enumerate(ts):
                assert acc[i, j] <= holevo_chi(one_sender_ensemble(q, t)) + 1e-9

    def test_grid_matches_pointwise(self):
        qs = np.linspace(0.05, 0.95, 7)
        ts = np.linspace(0.1, 1.4, 7)
        grid = acc_info_grid(qs, ts)
        point = np.array([[acc_info_one_sender(q, t).value_bits for t in ts] for q in qs])
        assert np.max(np.abs(grid - point)) < 1e-9

    @pytest.mark.parametrize("q", [0.3, 0.6, 0.87, 0.95])
    def test_continuity_at_regime_switch(self, q):
        ts = np.linspace(0.01, np.pi / 2 - 0.01, 200)
        regs = [acc_info_one_sender(q, t).regime for t in ts]
        switches = [k for k in range(len(ts) - 1) if regs[k] != regs[k + 1]]
        assert switches
        for k in switches:
            lo, hi = ts[k], ts[k + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if acc_info_one_sender(q, mid).regime == regs[k]:
                    lo = mid
                else:
                    hi = mid
            a, b = acc_info_one_sender(q, lo), acc_info_one_sender(q, hi)
            assert abs(a.value_bits - b.value_bits) < 1e-8

    @pytest.mark.parametrize("q,theta", random_points(10, 8))
    def test_against_brute_force_envelope(self, q, theta):
        env, _, _ = concave_envelope_at_half(q, theta)
        assert acc_info_one_sender(q, theta).value_bits >= env - 1e-9

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_three_point_mixtures_do_not_beat_two(self, seed):
        rng = np.random.default_rng(seed)
        q, theta = rng.uniform(0.01, 0.99), rng.uniform(0.01, np.pi / 2 - 0.01)
        s = np.sort(rng.uniform(0, 1, 3))
        if not s[0] < 0.5 < s[2]:
            s[0], s[2] = rng.uniform(0, 0.5), rng.uniform(0.5, 1)
        # weights with mean sigma = 1/2: pick w1, solve the other two
        w1 = rng.uniform(0, 1) * min(1.0, 1.0)
        a = np.array([[1, 1], [s[0], s[2]]])
        rhs = np.array([1 - w1, 0.5 - w1 * s[1]])
        w0, w2 = np.linalg.solve(a, rhs)
        if min(w0, w2) < 0:
            return
        v = best_mixture_value([w0, w1, w2], s, q, theta)
        assert v <= acc_info_one_sender(q, theta).value_bits + 1e-9

    def test_tangent_gap_vanishes_at_region2_point(self):
        q, theta = 0.87, 0.3
        r = acc_info_one_sender(q, theta)
        assert r.regime == 2
        sig = r.measurement.sigmas[1]
        assert abs(float(tangent_gap(sig, q, theta))) < 1e-9
        assert float(region2_value(sig, q, theta)) == pytest.approx(r.value_bits, abs=1e-12)

    def test_displayed_tangent_condition_differs(self):
        q, theta = 0.87, 0.3
        sig = acc_info_one_sender(q, theta).measurement.sigmas[1]
        assert abs(float(tangent_condition(sig, q, theta))) > 1e-3

    def test_theta_range(self):
        with pytest.raises(ValueError):
            acc_info_one_sender(0.5, 2.0)


@pytest.fixture(scope="module")
def one_sender_opt():
    return optimize_one_sender()


class TestOptimizeOneSender:
    def test_value(self, one_sender_opt):
        assert one_sender_opt.value_bits == pytest.approx(1.0931, abs=1e-3)
        assert one_sender_opt.value_bits == pytest.approx(1.0930977709703926, abs=1e-9)

    def test_argmax(self, one_sender_opt):
        assert one_sender_opt.argmax["q"] == pytest.approx(0.8701, abs=1e-3)
        # the weight on the encoded path; the reference point quotes 0.4715 for it
        assert one_sender_opt.argmax["cos2_theta"] == pytest.approx(0.52852, abs=1e-4)
        assert one_sender_opt.argmax["sin2_theta"] == pytest.approx(0.4715, abs=1e-3)

    def test_residuals(self, one_sender_opt):
        assert max(abs(v) for v in one_sender_opt.residuals) < 1e-9
        assert one_sender_opt.converged

    def test_grid_check(self, one_sender_opt):
        assert one_sender_opt.extra["grid_max_bits"] <= one_sender_opt.value_bits + 1e-9

    def test_json(self, one_sender_opt):
        import json
        d = json.loads(one_sender_opt.to_json())
        assert {"target", "value_bits", "argmax", "residuals", "regime"} <= set(d)


class TestLemmaScan:
    def test_global_maxima_at_alpha_pi(self):
        scan = lemma_alpha_beta_scan(0.87, np.pi / 4)
        assert scan.all_at_multiples_of_pi
        for a, b in scan.global_maxima:
            assert abs(a - np.pi) <= scan.spacing
            assert min(abs(b), abs(b - np.pi)) <= scan.spacing
        assert len(scan.global_maxima) == 2

    def test_alpha_zero_has_no_advantage(self):
        assert alpha_zero_max(0.87, np.pi / 4) <= 1 + 1e-9

    def test_no_superposition(self):
        sc = OneSenderScenario(0.6, 0.0, 0.0)
        grid = np.linspace(0, 2 * np.pi, 13)
        vals = [float(an._j_alpha_beta(0.3, b, a, sc)) for a in grid for b in grid]
        assert np.ptp(vals) < 1e-12


class TestTernary:
    @pytest.mark.parametrize("qp,theta", random_points(10, 21))
    def test_always_transmitting_sender(self, qp, theta):
        assert float(acc_info_two_sender_ternary(1.0, qp, theta)) == pytest.approx(
            float(acc_info_region3(qp, theta)), abs=1e-10)

    @pytest.mark.xfail(strict=True, reason="with q = 1 the formula is the sigma = 1/2 regime only")
    def test_always_transmitting_matches_best_regime(self):
        for qp, theta in random_points(10, 21):
            assert float(acc_info_two_sender_ternary(1.0, qp, theta)) == pytest.approx(
                acc_info_one_sender(qp, theta).value_bits, abs=1e-10)

    @given(q=st.floats(0, 1), qp=st.floats(0, 1))
    def test_symmetric_at_quarter_pi(self, q, qp):
        a = float(acc_info_two_sender_ternary(q, qp, np.pi / 4))
        b = float(acc_info_two_sender_ternary(qp, q, np.pi / 4))
        assert a == pytest.approx(b, abs=1e-12)

    @pytest.mark.parametrize("q,qp,theta", [(0.3, 0.8, 0.5), (0.9, 0.6, 1.1), (0.5, 0.5, 0.7)])
    def test_matches_built_channel(self, q, qp, theta):
        tm = build_mac(*two_sender_ternary_protocol(theta, q, qp))
        mi = channel_mutual_information(tm, [(1 - q, q), (1 - qp, qp / 2, qp / 2)])
        assert float(acc_info_two_sender_ternary(q, qp, theta)) == pytest.approx(mi, abs=1e-12)

    @pytest.mark.parametrize("q,qp,theta", [(0.3, 0.8, 0.5), (0.9, 0.6, 1.1), (0.7, 0.4, np.pi / 4)])
    def test_stationarity_is_the_gradient(self, q, qp, theta):
        f = lambda v: float(acc_info_two_sender_ternary(*v))  # noqa: E731
        h = 1e-6
        x = np.array([q, qp, theta])
        grad = [(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(3)]
        r = stationarity_two_sender_ternary(q, qp, theta)
        assert r[0] == pytest.approx(grad[0], abs=1e-6)
        assert r[1] == pytest.approx(grad[1], abs=1e-6)
        assert r[2] == pytest.approx(grad[2] / np.sin(2 * theta), abs=1e-6)

    def test_optimum(self):
        r = optimize_two_sender_ternary()
        assert r.value_bits == pytest.approx(1.10138, abs=1e-4)
        assert r.argmax["q"] == pytest.approx(0.9197, abs=1e-3)
        assert r.argmax["q_prime"] == pytest.approx(0.9197, abs=1e-3)
        assert r.argmax["theta"] == pytest.approx(np.pi / 4, abs=1e-6)
        assert max(abs(v) for v in r.residuals) < 1e-9

    def test_range(self):
        with pytest.raises(ValueError):
            acc_info_two_sender_ternary(1.5, 0.5, 0.3)


class TestHolevo:
    def test_half(self):
        assert 2 * 0.5 * float(an._h2(0.5)) == 1.0

    def test_closed_form(self):
        r = holevo_one_sender_closed_form()
        assert r.argmax["x"] == pytest.approx(0.7035, abs=1e-4)
        assert r.value_bits == pytest.approx(1.2339, abs=1e-4)
        assert abs(r.residuals[0]) < 1e-12
        assert r.extra["lemma_min_margin"] >= 0
        assert r.extra["lemma_max_hessian_eig"] <= 1e-12

    def test_matches_ensemble(self):
        x = holevo_one_sender_closed_form().argmax["x"]
        chi = holevo_chi(one_sender_ensemble(x, np.arccos(np.sqrt(x))))
        assert chi == pytest.approx(2 * x * float(an._h2(x)), abs=1e-10)

    @given(x=st.floats(0.01, 0.99), y=st.floats(0.01, 0.99))
    def test_objective_symmetric(self, x, y):
        assert holevo_objective(x, y) == holevo_objective(y, x)

    def test_extremal_bound_is_tight_on_the_diagonal(self):
        x = holevo_one_sender_closed_form().argmax["x"]
        theta = np.arccos(np.sqrt(x))
        assert extremal_holevo_bound(theta, x) == pytest.approx(holevo_chi(one_sender_ensemble(x, theta)), abs=1e-10)

    def test_transcendental_sign_change(self):
        assert holevo_transcendental(0.6) > 0 > holevo_transcendental(0.8)

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_log_n(self, n):
        assert holevo_logn(n) == pytest.approx(np.log2(n), abs=1e-10)

    def test_log_n_assisted_is_larger(self):
        assert holevo_logn(2, assisted=True) > 1.0

    def test_extremal_bound(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            theta = rng.uniform(0, np.pi / 2)
            state = PureState.from_paths([np.cos(theta), np.sin(theta)])
            k = int(rng.integers(2, 5))
            priors = rng.dirichlet(np.ones(k))
            ops = []
            transmit = 0.0
            for pr in priors:
                if rng.random() < 0.4:
                    ops.append(NpeOperation.blocking())
                else:
                    ops.append(NpeOperation.extremal(0.0, phi1=rng.uniform(0, 2 * np.pi)))
                    transmit += pr
            states = tuple(apply_npe(op, 1, state) for op in ops)
            chi = holevo_chi(CqEnsemble(priors, states))
            assert chi <= extremal_holevo_bound(theta, transmit) + 1e-9
