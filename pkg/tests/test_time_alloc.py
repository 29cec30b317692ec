import numpy as np
import pytest

from pinchmec.scenario import dbm_to_watts
from pinchmec.time_alloc import TimeAllocProblem, solve_time_alloc


def make_problem(seed=None, rate=None, h=None, p=None, kappa=1e-28):
    """Randomized but physically plausible subproblem instances."""
    rng = np.random.default_rng(seed if seed is not None else 0)
    k = 4
    return TimeAllocProblem(
        offload_rate=rate if rate is not None else float(rng.uniform(1e6, 5e8)),
        h_gains=h if h is not None else rng.uniform(0.05, 5.0, k) * 1e-7,
        p=p if p is not None else rng.uniform(0.0, 5.0, k) * 1e-6,
        frame=1.0,
        cycles_per_bit=200.0,
        kappa=kappa,
        beta=0.8,
        bs_power=dbm_to_watts(43.0),
    )


def grid_oracle(prob, n=200):
    """Brute force over (tau2, shared frequency scaling) without the 1-D reduction."""
    best = -np.inf
    a = prob.beta * prob.frame * prob.bs_power * prob.h_gains
    b = prob.p + prob.beta * prob.bs_power * prob.h_gains
    scales = np.linspace(0.0, 1.0, n)
    for tau2 in np.linspace(0.0, prob.frame, n):
        budget = a - b * tau2
        if np.any(budget < 0.0):
            continue
        f_max = np.cbrt(np.maximum(budget, 0.0) / (prob.frame * prob.kappa))
        objs = prob.offload_rate * tau2 + prob.frame / prob.cycles_per_bit * np.sum(
            scales[:, None] * f_max, axis=1
        )
        best = max(best, float(np.max(objs)))
    return best


def phi(prob, tau2):
    budget = prob.beta * (prob.frame - tau2) * prob.bs_power * prob.h_gains - prob.p * tau2
    f = np.cbrt(np.maximum(budget, 0.0) / (prob.frame * prob.kappa))
    return prob.offload_rate * tau2 + prob.frame / prob.cycles_per_bit * float(np.sum(f))


class TestSolveTimeAlloc:
    def test_no_offload_value_harvests_whole_frame(self):
        prob = make_problem(rate=0.0)
        sol = solve_time_alloc(prob)
        assert sol.tau2 == 0.0 and sol.tau1 == prob.frame
        expected_f = np.cbrt(
            prob.beta * prob.frame * prob.bs_power * prob.h_gains / (prob.frame * prob.kappa)
        )
        np.testing.assert_allclose(sol.f, expected_f, rtol=1e-12)
        assert not sol.degenerate

    def test_huge_kappa_linear_limit(self):
        # kappa -> 1e10 freezes local computing; KKT by hand gives the
        # boundary tau2 = min_k beta*T*P*H_k / (p_k + beta*P*H_k)
        prob = make_problem(seed=3, rate=1e8, kappa=1e10)
        sol = solve_time_alloc(prob)
        a = prob.beta * prob.frame * prob.bs_power * prob.h_gains
        b = prob.p + prob.beta * prob.bs_power * prob.h_gains
        expected = float(np.min(a / b))
        assert sol.tau2 == pytest.approx(expected, rel=1e-6)
        np.testing.assert_allclose(sol.f, 0.0, atol=1e-3)

    def test_against_grid_oracle(self):
        for seed in range(10):
            prob = make_problem(seed=seed)
            sol = solve_time_alloc(prob)
            oracle = grid_oracle(prob, n=400)
            assert sol.objective >= oracle * (1.0 - 1e-3)

    def test_kkt_residual_at_interior_optimum(self):
        found_interior = 0
        for seed in range(20):
            prob = make_problem(seed=seed)
            sol = solve_time_alloc(prob)
            upper = min(
                prob.frame,
                float(
                    np.min(
                        prob.beta * prob.frame * prob.bs_power * prob.h_gains
                        / (prob.p + prob.beta * prob.bs_power * prob.h_gains)
                    )
                ),
            )
            # step sized for the stiff frontier curvature: small enough to stay
            # on the smooth side of the budget kink, large enough to beat
            # float cancellation in phi ~ 1e8
            h = 1e-9 * prob.frame
            if h < sol.tau2 < upper - h:
                found_interior += 1
                deriv = (phi(prob, sol.tau2 + h) - phi(prob, sol.tau2 - h)) / (2 * h)
                assert abs(deriv) < 1e-6 * abs(sol.objective)
        assert found_interior >= 5

    def test_returned_point_feasible(self):
        for seed in range(20):
            prob = make_problem(seed=seed)
            sol = solve_time_alloc(prob)
            assert sol.tau1 >= 0.0 and sol.tau2 >= 0.0
            assert sol.tau1 + sol.tau2 <= prob.frame * (1 + 1e-12)
            budget = prob.beta * sol.tau1 * prob.bs_power * prob.h_gains
            spend = prob.p * sol.tau2 + prob.frame * prob.kappa * sol.f**3
            scale = np.maximum(np.maximum(budget, spend), 1e-30)
            assert np.all(spend - budget <= 1e-9 * scale)

    def test_degenerate_case_flagged(self):
        prob = make_problem(rate=0.0, h=np.zeros(4), p=np.zeros(4))
        sol = solve_time_alloc(prob)
        assert sol.degenerate
        assert sol.tau2 == 0.0 and sol.tau1 == prob.frame
        np.testing.assert_array_equal(sol.f, 0.0)

    def test_blocked_device_forces_zero_offload_time(self):
        # one device with positive power but no downlink gain cannot afford any tau2
        prob = make_problem(seed=1, h=np.array([0.0, 1e-7, 1e-7, 1e-7]), p=np.array([1e-6, 0, 0, 0]))
        sol = solve_time_alloc(prob)
        assert sol.tau2 == 0.0

    def test_midpoint_concavity_witness(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            prob = make_problem(seed=seed)
            a = prob.beta * prob.frame * prob.bs_power * prob.h_gains
            b = prob.p + prob.beta * prob.bs_power * prob.h_gains
            upper = min(prob.frame, float(np.min(a / b)))
            for _ in range(20):
                left, right = np.sort(rng.uniform(0.0, upper, 2))
                mid = 0.5 * (left + right)
                lhs = phi(prob, mid)
                rhs = 0.5 * (phi(prob, left) + phi(prob, right))
                assert lhs >= rhs - 1e-9 * max(abs(lhs), abs(rhs), 1.0)

    def test_incumbent_never_regress(self):
        prob = make_problem(seed=7)
        sol = solve_time_alloc(prob)
        # hand the solver its own solution as the incumbent: result cannot be worse
        again = solve_time_alloc(prob, incumbent=(sol.tau1, sol.tau2, sol.f))
        assert again.objective >= sol.objective
        # an infeasible incumbent (overspends energy) is ignored
        bad = solve_time_alloc(prob, incumbent=(0.0, prob.frame, np.full(4, 1e12)))
        assert bad.objective == pytest.approx(sol.objective, rel=1e-12)

    def test_objective_beats_both_endpoints(self):
        for seed in range(10):
            prob = make_problem(seed=seed)
            sol = solve_time_alloc(prob)
            a = prob.beta * prob.frame * prob.bs_power * prob.h_gains
            b = prob.p + prob.beta * prob.bs_power * prob.h_gains
            upper = min(prob.frame, float(np.min(a / b)))
            assert sol.objective >= phi(prob, 0.0) - 1e-9
            assert sol.objective >= phi(prob, upper) - 1e-9
