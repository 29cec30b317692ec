import cmath
import math
from dataclasses import replace

import numpy as np
import pytest

from pinchmec.channel import PaLayout
from pinchmec.scenario import ScenarioConfig, dbm_to_watts, sample_devices, with_seed
from pinchmec.system_model import (
    RadiationVector,
    ResourceAllocation,
    SolutionState,
    check_feasibility,
    evaluate_capacity,
    harvested_energy,
    harvested_energy_all,
    local_compute,
    offload_bits,
)


def make_state(config, k=None, ul_xs=None, dl_xs=None, alpha=None, p=None, tau1=0.5, tau2=0.5, f=None):
    k = k if k is not None else config.num_devices
    d = config.waveguide_height
    ul = PaLayout(xs=ul_xs if ul_xs is not None else [3.75, 11.25, 18.75, 26.25], height=d)
    dl = PaLayout(xs=dl_xs if dl_xs is not None else ul.xs, height=d)
    m = len(ul)
    return SolutionState(
        uplink_layout=ul,
        downlink_layout=dl,
        w=RadiationVector(alpha if alpha is not None else np.full(m, 1 / math.sqrt(m))),
        alloc=ResourceAllocation(
            p=p if p is not None else np.zeros(k),
            tau1=tau1,
            tau2=tau2,
            f=f if f is not None else np.zeros(k),
        ),
    )


class TestHarvestedEnergy:
    def test_zero_harvest_time(self, config, consts):
        layout = PaLayout(xs=[5.0], height=3.0)
        e = harvested_energy(layout, RadiationVector([1.0]), (5.0, 0.0, 0.0), 0.0, config, consts)
        assert e == 0.0

    def test_doubling_power_doubles_energy(self, config, consts, devices):
        layout = PaLayout(xs=[5.0, 15.0, 22.0, 28.0], height=3.0)
        w = RadiationVector([0.5, 0.5, 0.5, 0.5])
        base = harvested_energy_all(layout, w, devices, 0.5, config, consts)
        doubled_cfg = replace(config, bs_power=2.0 * config.bs_power)
        doubled = harvested_energy_all(layout, w, devices, 0.5, doubled_cfg, consts)
        np.testing.assert_allclose(doubled, 2.0 * base, rtol=1e-12)

    def test_hand_chain_value(self, consts):
        # beta=0.5, tau1=0.5, P_B=43 dBm, single antenna straight above the device
        config = ScenarioConfig(harvest_efficiency=0.5)
        layout = PaLayout(xs=[5.0], height=3.0)
        e = harvested_energy(layout, RadiationVector([1.0]), (5.0, 0.0, 0.0), 0.5, config, consts)
        expected = 0.5 * 0.5 * dbm_to_watts(43.0) * (consts.eta / 3.0) ** 2
        assert e == pytest.approx(expected, rel=1e-12)
        assert e == pytest.approx(4.02e-7, rel=2e-3)

    def test_linear_in_tau1_and_power(self, config, consts, devices):
        rng = np.random.default_rng(0)
        layout = PaLayout(xs=np.sort(rng.uniform(0, 30, 4)), height=3.0)
        w = RadiationVector(rng.uniform(-0.5, 0.5, 4))
        base = harvested_energy_all(layout, w, devices, 0.25, config, consts)
        for scale in rng.uniform(0.1, 4.0, size=8):
            scaled_tau = harvested_energy_all(layout, w, devices, 0.25 * scale, config, consts)
            np.testing.assert_allclose(scaled_tau, scale * base, rtol=1e-12)
            cfg2 = replace(config, bs_power=config.bs_power * scale)
            scaled_p = harvested_energy_all(layout, w, devices, 0.25, cfg2, consts)
            np.testing.assert_allclose(scaled_p, scale * base, rtol=1e-12)


class TestLocalCompute:
    def test_zero_frequency(self, config):
        assert local_compute(0.0, config) == (0.0, 0.0)

    def test_reference_values(self, config):
        # f = 1e8, T = 1, D = 200, kappa = 1e-28
        bits, energy = local_compute(1e8, config)
        assert bits == pytest.approx(5e5, rel=1e-12)
        assert energy == pytest.approx(1e-4, rel=1e-12)

    def test_cubic_energy_law(self, config):
        _, e1 = local_compute(3.7e7, config)
        _, e2 = local_compute(7.4e7, config)
        assert e2 == pytest.approx(8.0 * e1, rel=1e-12)


class TestOffloadBits:
    def test_zero_powers(self, config, consts, devices):
        state = make_state(config)
        assert offload_bits(state.uplink_layout, state.alloc, devices, config, consts) == 0.0

    def test_zero_offload_time(self, config, consts, devices):
        state = make_state(config, p=np.full(4, 1e-6), tau2=0.0, tau1=1.0)
        assert offload_bits(state.uplink_layout, state.alloc, devices, config, consts) == 0.0

    def test_unit_snr_reference(self, config, consts):
        # single device with p*g = M*sigma^2 -> log2(2) = 1 -> B*tau2 bits
        cfg = replace(config, num_devices=1)
        devices = sample_devices(cfg)
        layout = PaLayout(xs=[10.0], height=3.0)
        from pinchmec.channel import uplink_gains

        g = uplink_gains(layout, devices, consts)[0]
        p = 1 * consts.noise_power / g
        alloc = ResourceAllocation(p=[p], tau1=0.5, tau2=0.5, f=[0.0])
        state = SolutionState(
            uplink_layout=layout, downlink_layout=layout, w=RadiationVector([1.0]), alloc=alloc
        )
        bits = offload_bits(state.uplink_layout, state.alloc, devices, cfg, consts)
        assert bits == pytest.approx(5e7, rel=1e-12)

    def test_monotone_in_power_and_time(self, config, consts, devices):
        base_p = np.full(4, 1e-7)
        prev = -1.0
        for scale in [0.5, 1.0, 2.0, 4.0, 8.0]:
            state = make_state(config, p=base_p * scale)
            bits = offload_bits(state.uplink_layout, state.alloc, devices, config, consts)
            assert bits > prev
            prev = bits
        prev = -1.0
        for tau2 in [0.1, 0.2, 0.4, 0.8]:
            state = make_state(config, p=base_p, tau1=1.0 - tau2, tau2=tau2)
            bits = offload_bits(state.uplink_layout, state.alloc, devices, config, consts)
            assert bits > prev
            prev = bits


class TestEvaluateCapacity:
    def test_all_zero(self, config, consts, devices):
        state = make_state(config)
        assert evaluate_capacity(state, devices, config, consts) == 0.0

    def test_additivity(self, config, consts, devices):
        state = make_state(config, p=np.full(4, 2e-7), f=np.full(4, 1e7))
        local_total = sum(local_compute(f, config)[0] for f in state.alloc.f)
        off = offload_bits(state.uplink_layout, state.alloc, devices, config, consts)
        assert evaluate_capacity(state, devices, config, consts) == pytest.approx(
            off + local_total, rel=1e-12
        )

    def test_double_entry_oracle(self, config, consts):
        # independent cmath re-evaluation of the whole capacity chain
        rng = np.random.default_rng(11)
        for trial in range(20):
            cfg = with_seed(config, trial)
            devices = sample_devices(cfg)
            ul = np.sort(rng.uniform(0, 30, 4))
            p = rng.uniform(0, 5e-7, 4)
            f = rng.uniform(0, 3e7, 4)
            tau2 = rng.uniform(0.1, 0.9)
            state = make_state(cfg, ul_xs=ul, p=p, tau1=1.0 - tau2, tau2=tau2, f=f)

            total = 0.0
            for k, dev in enumerate(devices.positions):
                total += cfg.frame_duration * f[k] / cfg.cycles_per_bit
            snr_num = 0.0
            for k, dev in enumerate(devices.positions):
                s = 0 + 0j
                for x in ul:
                    r = math.sqrt((dev[0] - x) ** 2 + dev[1] ** 2 + 3.0**2)
                    s += (
                        consts.eta
                        / r
                        * cmath.exp(-1j * 2 * math.pi * (r / consts.lambda_free + x / consts.lambda_guided))
                    )
                snr_num += p[k] * abs(s) ** 2
            total += cfg.bandwidth * tau2 * math.log2(1 + snr_num / (4 * consts.noise_power))

            assert evaluate_capacity(state, devices, cfg, consts) == pytest.approx(total, rel=1e-10)


class TestCheckFeasibility:
    def test_all_zero_allocation_feasible(self, config, consts, devices):
        report = check_feasibility(make_state(config), devices, config, consts)
        assert report.feasible
        assert np.all(report.energy >= 0.0)

    def test_energy_boundary_slack_zero(self, config, consts, devices):
        state = make_state(config)
        e = harvested_energy_all(state.downlink_layout, state.w, devices, 0.5, config, consts)
        state = replace(state, alloc=replace(state.alloc, p=e / 0.5))
        report = check_feasibility(state, devices, config, consts)
        assert report.feasible
        np.testing.assert_allclose(report.energy, 0.0, atol=1e-22)

    def test_radiation_norm_tolerance(self, config, consts, devices):
        alpha = np.zeros(4)
        alpha[0] = math.sqrt(1.0 + 1e-6)
        state = make_state(config, alpha=alpha)
        report = check_feasibility(state, devices, config, consts, tol=1e-9)
        assert not report.feasible
        assert any(v == "radiation" for v in report.violations)

    def test_spacing_violation_reported(self, config, consts, devices):
        state = make_state(config, ul_xs=[1.0, 1.001, 20.0, 25.0])
        report = check_feasibility(state, devices, config, consts)
        assert not report.feasible
        assert "spacing_uplink" in report.violations
        assert report.spacing_uplink == pytest.approx(0.001 - config.min_spacing)

    def test_range_violation_reported(self, config, consts, devices):
        state = make_state(config, dl_xs=[1.0, 10.0, 20.0, 30.5])
        report = check_feasibility(state, devices, config, consts)
        assert "range_downlink" in report.violations

    def test_time_budget(self, config, consts, devices):
        state = make_state(config, tau1=0.7, tau2=0.4)
        report = check_feasibility(state, devices, config, consts)
        assert "time" in report.violations
        assert report.time == pytest.approx(-0.1)

    def test_energy_violation_flags_device(self, config, consts, devices):
        state = make_state(config, p=np.array([1e-3, 0.0, 0.0, 0.0]))
        report = check_feasibility(state, devices, config, consts)
        assert not report.feasible
        assert "energy[0]" in report.violations


class TestResourceAllocation:
    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            ResourceAllocation(p=[-1e-9], tau1=0.5, tau2=0.5, f=[0.0])
        with pytest.raises(ValueError):
            ResourceAllocation(p=[0.0], tau1=-0.1, tau2=0.5, f=[0.0])
        with pytest.raises(ValueError):
            ResourceAllocation(p=[0.0], tau1=0.5, tau2=0.5, f=[-1.0])
