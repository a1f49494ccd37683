"""Independent reference computations shared by unit and acceptance tests."""
import math

import numpy as np

from smpra import smp
from smpra.llr import logit, sigmoid
from smpra.model import SystemConfig
from smpra.smp import prob_oracle_update

# Keep target LLRs where logit(p) is still accurate to ~1e-12 in double precision.
MAX_LLR = 12.0


def _state(rng, M, Ns, Np, p_a=0.5):
    c = SystemConfig(M=int(M), N_s=int(Ns), N_p=int(Np), N_c=1, p_a=p_a, snr_db=0.0)
    return smp.init_messages(c, clamp=math.inf)


def _one_config(kind, rng, backend):
    """Return |LLR update - logit(probability update)| for one random configuration,
    or None when the drawn target falls outside the resolvable LLR range."""
    M, Ns, Np = rng.integers(1, 5), rng.integers(1, 7), rng.integers(1, 5)
    m, s, p = rng.integers(M), rng.integers(Ns), rng.integers(Np)
    if kind == "sn":
        st = _state(rng, M, Ns, Np)
        H, Y = rng.normal(size=(M, Ns)), rng.normal(size=(M, Np))
        st.l_vs[:] = rng.uniform(-8, 8, st.l_vs.shape)
        s2 = rng.uniform(0.3, 2.0)
        got = smp.sn_update(st, H, Y, s2, backend)[m, s, p]
        others = [i for i in range(Ns) if i != s]
        prob = prob_oracle_update("sn", y=Y[m, p], h_self=H[m, s], h_others=H[m, others],
                                  p_others=sigmoid(st.l_vs[m, others, p]), sigma_sq=s2)
    elif kind == "cn":
        p_a = rng.uniform(0.02, 0.98)
        st = _state(rng, M, Ns, Np, p_a)
        st.l_vc[:] = rng.uniform(-8, 8, st.l_vc.shape)
        got = smp.cn_update(st, backend=backend)[s, p]
        others = [k for k in range(Np) if k != p]
        prob = prob_oracle_update("cn", p_a=p_a, p_vc_others=sigmoid(st.l_vc[s, others]))
    else:
        st = _state(rng, M, Ns, Np)
        st.prior_llr = rng.uniform(-6, 2)
        st.l_s[:] = rng.uniform(-3, 3, st.l_s.shape)
        st.l_c[:] = rng.uniform(-4, 2, st.l_c.shape)
        column = sigmoid(st.l_s[:, s, p])
        p_bar, p_c = float(sigmoid(st.prior_llr)), float(sigmoid(st.l_c[s, p]))
        if kind == "output":
            got = smp.output_llrs(st, backend)[s, p]
            prob = prob_oracle_update("output", p_bar=p_bar, p_c=p_c, p_s=column)
        else:
            l_vs, l_vc = smp.vn_update(st, backend)
            if kind == "vn_to_sn":
                got = l_vs[m, s, p]
                prob = prob_oracle_update("vn_to_sn", p_bar=p_bar, p_c=p_c,
                                          p_s_others=np.delete(column, m))
            else:
                got = l_vc[s, p]
                prob = prob_oracle_update("vn_to_cn", p_bar=p_bar, p_s=column)
    if abs(got) > MAX_LLR:
        return None
    return abs(float(logit(prob)) - float(got))


def duality_max_error(kind, n, seed=0, backend=None):
    """Largest disagreement over ``n`` accepted random configurations of ``kind``."""
    rng = np.random.default_rng(seed)
    worst, done = 0.0, 0
    while done < n:
        err = _one_config(kind, rng, backend)
        if err is None:
            continue
        worst = max(worst, err)
        done += 1
    return worst


def brute_force_posterior(inst):
    """Exact Pr(s_p = 1 | Y) for a single device by enumerating inactivity and
    every preamble choice."""
    c = inst.config
    h, Y, s2 = inst.H[:, 0], inst.Y, inst.sigma_eff_sq
    log_w = [math.log1p(-c.p_a) - np.sum(Y**2) / (2 * s2)] if c.p_a < 1 else [-math.inf]
    for j in range(c.N_p):
        mean = np.zeros_like(Y)
        mean[:, j] = h
        log_w.append(math.log(c.p_a / c.N_p) - np.sum((Y - mean) ** 2) / (2 * s2))
    log_w = np.array(log_w)
    w = np.exp(log_w - log_w.max())
    return (w / w.sum())[1:]
