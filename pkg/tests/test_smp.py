import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smpra import smp
from smpra.model import SystemConfig, generate_instance, synthesize
from smpra.smp import SmpParams, prob_oracle_update, run_smp

from oracles import duality_max_error


def cfg(**kw):
    base = dict(M=2, N_s=3, N_p=2, N_c=1, p_a=0.5, snr_db=0.0, seed=0)
    base.update(kw)
    return SystemConfig(**base)


def test_params_validation():
    with pytest.raises(ValueError):
        SmpParams(llr_clamp=5)
    with pytest.raises(ValueError):
        SmpParams(llr_clamp=math.inf)
    with pytest.raises(ValueError):
        SmpParams(max_iters=0)
    assert SmpParams().llr_clamp == 30.0 and SmpParams().max_iters == 20


def test_init_prior_values():
    assert smp.init_messages(cfg(p_a=0.5, N_p=1)).prior_llr == 0.0
    st_ = smp.init_messages(cfg(p_a=0.2, N_p=64))
    assert st_.prior_llr == pytest.approx(math.log(0.003125 / 0.996875), abs=1e-14)
    assert st_.prior_llr == pytest.approx(-5.765, abs=1e-3)
    assert np.all(st_.l_vs == st_.prior_llr) and np.all(st_.l_vc == st_.prior_llr)
    assert not st_.l_s.any() and not st_.l_c.any() and st_.iter == 0
    assert smp.init_messages(cfg(p_a=0.0)).prior_llr == -30.0


def _state(M, Ns, Np, p_a=0.5):
    return smp.init_messages(cfg(M=M, N_s=Ns, N_p=Np, p_a=p_a), clamp=math.inf)


def test_sn_zero_channel_gain(backend):
    st_ = _state(1, 2, 1)
    st_.l_vs[:] = 0.3
    l_s = smp.sn_update(st_, np.array([[0.0, 1.2]]), np.array([[4.0]]), 0.7, backend)
    assert l_s[0, 0, 0] == 0.0


def test_sn_one_interferer(backend):
    # other VN p = 0.5, h = 1, sigma^2 = 0.25: u = 0.5, v = 0.5; y = 1.5 -> (2*1*1 - 1)/1
    st_ = _state(1, 2, 1)
    st_.l_vs[:] = 0.0
    l_s = smp.sn_update(st_, np.array([[1.0, 1.0]]), np.array([[1.5]]), 0.25, backend)
    assert l_s[0, 0, 0] == pytest.approx(1.0, abs=1e-14)


def test_sn_no_interferers(backend):
    st_ = _state(1, 1, 1)
    l_s = smp.sn_update(st_, np.array([[1.0]]), np.array([[1.0]]), 1.0, backend)
    assert l_s[0, 0, 0] == pytest.approx(0.5, abs=1e-15)


def test_sn_variance_floor(backend):
    st_ = smp.init_messages(cfg(M=1, N_s=2, N_p=1), clamp=30.0)
    st_.l_vs[:] = 40.0  # saturated messages, zero noise
    l_s = smp.sn_update(st_, np.array([[1.0, 1.0]]), np.array([[2.0]]), 0.0, backend)
    assert np.all(np.isfinite(l_s)) and np.all(np.abs(l_s) <= 30.0)


def test_vn_hand_evaluated(backend):
    st_ = smp.init_messages(cfg(M=3, N_s=1, N_p=1), clamp=30.0)
    st_.prior_llr = -1.0
    st_.l_s[:, 0, 0] = [1.0, 2.0, 3.0]
    st_.l_c[:] = 0.5
    l_vs, l_vc = smp.vn_update(st_, backend)
    assert l_vs[0, 0, 0] == 4.5
    assert l_vc[0, 0] == 5.0


def test_vn_single_antenna_and_zero_inputs(backend):
    st_ = smp.init_messages(cfg(M=1, N_s=2, N_p=3), clamp=30.0)
    st_.l_s[:] = 7.0
    st_.l_c[:] = 0.25
    l_vs, _ = smp.vn_update(st_, backend)
    assert np.all(l_vs == st_.prior_llr + 0.25)
    st_.l_s[:] = 0.0
    st_.l_c[:] = 0.0
    _, l_vc = smp.vn_update(st_, backend)
    assert np.all(l_vc == st_.prior_llr)


def test_cn_single_preamble(backend):
    st_ = smp.init_messages(cfg(N_p=1, p_a=0.3), clamp=30.0)
    st_.l_vc[:] = 4.0
    l_c = smp.cn_update(st_, backend=backend)
    assert np.allclose(l_c, math.log(0.3 / 0.7), atol=1e-14)


def test_cn_hand_evaluated(backend):
    st_ = smp.init_messages(cfg(N_p=2, p_a=0.5), clamp=30.0)
    st_.l_vc[:] = 0.0
    l_c = smp.cn_update(st_, backend=backend)
    assert np.allclose(l_c, -math.log(3.0), atol=1e-14)


def test_cn_quiet_neighbours_give_activation_prior(backend):
    st_ = smp.init_messages(cfg(N_p=5, p_a=0.2), clamp=30.0)
    st_.l_vc[:] = -30.0
    l_c = smp.cn_update(st_, backend=backend)
    assert np.allclose(l_c, math.log(0.2 / 0.8), atol=1e-11)


def test_cn_zero_activation(backend):
    st_ = smp.init_messages(cfg(N_p=3, p_a=0.0), clamp=30.0)
    assert np.all(smp.cn_update(st_, backend=backend) == -30.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-40, 40), min_size=1, max_size=8), st.floats(0.001, 0.999))
def test_cn_ceiling(values, p_a):
    st_ = smp.init_messages(cfg(N_s=1, N_p=len(values), p_a=p_a), clamp=30.0)
    st_.l_vc[0] = values
    l_c = smp.cn_update(st_)
    assert np.all(l_c <= math.log(p_a / (1 - p_a)) + 1e-9)


def test_output_hand_evaluated(backend):
    st_ = smp.init_messages(cfg(M=2, N_s=1, N_p=1), clamp=30.0)
    st_.prior_llr = -5.765
    st_.l_s[:] = 0.5
    st_.l_c[:] = 3.0
    assert smp.output_llrs(st_, backend)[0, 0] == pytest.approx(-1.765, abs=1e-12)
    st_.l_s[:] = 0.0
    st_.l_c[:] = 0.0
    assert smp.output_llrs(st_, backend)[0, 0] == -5.765


def test_decide():
    assert np.array_equal(smp.decide([[0.0, -0.1, 5.0]]), [[1.0, 0.0, 1.0]])


def test_extrinsic_consistency_every_iteration(backend):
    inst = generate_instance(cfg(M=3, N_s=6, N_p=4, snr_db=-5, seed=2))
    st_ = smp.init_messages(inst.config, clamp=30.0)
    for _ in range(5):
        smp.sn_update(st_, inst.H, inst.Y, inst.sigma_eff_sq, backend)
        smp.cn_update(st_, backend=backend)
        out = smp.output_llrs(st_, backend)
        _, l_vc = smp.vn_update(st_, backend)
        inside = np.abs(l_vc) < 30.0
        assert inside.any()
        assert np.array_equal((l_vc + st_.l_c)[inside], out[inside])


def _run_unclamped_max(inst, iters):
    st_ = smp.init_messages(inst.config, clamp=math.inf)
    biggest = 0.0
    for _ in range(iters):
        smp.sn_update(st_, inst.H, inst.Y, inst.sigma_eff_sq)
        smp.cn_update(st_)
        smp.vn_update(st_)
        biggest = max(biggest, *(np.max(np.abs(a)) for a in (st_.l_s, st_.l_c, st_.l_vs, st_.l_vc)))
    return biggest


def test_clamp_transparency():
    inst = generate_instance(cfg(M=2, N_s=5, N_p=3, snr_db=-8, seed=4))
    params = SmpParams(max_iters=8)
    assert _run_unclamped_max(inst, 8) < 15.0
    a = run_smp(inst, params)
    b = run_smp(inst, params, clamp=False)
    assert np.array_equal(a.output_llr, b.output_llr) and a.iters_run == b.iters_run


def test_result_decisions_follow_llr_sign():
    inst = generate_instance(cfg(M=8, N_s=20, N_p=4, snr_db=0, seed=3))
    res = run_smp(inst, record_eer=True)
    assert np.array_equal(res.S_hat, (res.output_llr >= 0).astype(float))
    assert len(res.per_iter_eer) == res.iters_run == len(res.per_iter_mean_abs_llr)


def _tree_fixed_point(inst):
    """Closed-form SMP output for a single device: the message rules reduce to
    odds_p = (p0/q0) L_p c_p / (1 - c_p),  c_p = p_a prod_{k != p} q0 / (q0 + p0 L_k),
    with L_k the Gaussian likelihood ratio of column k."""
    c = inst.config
    p0, q0 = c.p_0, 1 - c.p_0
    h, Y, s2 = inst.H[:, 0], inst.Y, inst.sigma_eff_sq
    log_L = np.array([np.sum((Y[:, k] ** 2 - (Y[:, k] - h) ** 2) / (2 * s2)) for k in range(c.N_p)])
    L = np.exp(log_L)
    out = []
    for p in range(c.N_p):
        cp = c.p_a * np.prod([q0 / (q0 + p0 * L[k]) for k in range(c.N_p) if k != p])
        out.append(math.log(p0 / q0) + log_L[p] + math.log(cp / (1 - cp)))
    return np.array(out)


@pytest.mark.parametrize("seed", range(10))
def test_single_device_matches_closed_form(seed, backend):
    inst = generate_instance(SystemConfig(M=2, N_s=1, N_p=4, N_c=1, p_a=0.6, snr_db=3.0, seed=seed))
    res = run_smp(inst, SmpParams(max_iters=3), backend=backend)
    assert np.max(np.abs(res.output_llr[0] - _tree_fixed_point(inst))) < 1e-9


def test_noiseless_overdetermined_recovery():
    for seed in range(10):
        c = SystemConfig(M=64, N_s=8, N_p=4, N_c=1, p_a=0.5, snr_db=0.0, seed=seed)
        inst = generate_instance(c, sigma_eff_sq=0.0)
        res = run_smp(inst)
        assert np.array_equal(res.S_hat, inst.S), seed


def test_no_activity_gives_empty_estimate():
    c = SystemConfig(M=8, N_s=10, N_p=4, N_c=1, p_a=0.0, snr_db=0.0, seed=1)
    inst = generate_instance(c)
    assert not inst.S.any()
    assert not run_smp(inst).S_hat.any()


def test_run_is_deterministic(backend):
    inst = generate_instance(cfg(M=6, N_s=30, N_p=8, snr_db=-3, seed=9))
    a, b = run_smp(inst, backend=backend), run_smp(inst, backend=backend)
    assert np.array_equal(a.output_llr, b.output_llr)


def test_trace_csv(tmp_path):
    inst = generate_instance(cfg(M=4, N_s=10, N_p=3, seed=1))
    res = run_smp(inst, SmpParams(max_iters=3), record_eer=True)
    smp.write_trace(res, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,mean_abs_llr,eer"
    assert len(lines) == res.iters_run + 1
    assert float(lines[1].split(",")[2]) == res.per_iter_eer[0]


# Probability-domain oracle

def test_oracle_trivial_cases():
    p0 = 0.03
    assert prob_oracle_update("vn_to_cn", p_bar=p0, p_s=[0.5, 0.5, 0.5]) == pytest.approx(p0, abs=1e-15)
    assert prob_oracle_update("cn", p_a=0.4, p_vc_others=[]) == 0.4
    with pytest.raises(ValueError):
        prob_oracle_update("cn", p_a=0.4, p_vc_others=[1.0])
    with pytest.raises(ValueError):
        prob_oracle_update("bogus")


@pytest.mark.parametrize("kind", ["sn", "vn_to_sn", "vn_to_cn", "cn", "output"])
def test_duality(kind, backend):
    assert duality_max_error(kind, 200, seed=11, backend=backend) < 1e-9
