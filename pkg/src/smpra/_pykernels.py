"""Vectorized numpy message-update kernels (reference backend).

Array layout: SN<->VN messages are ``(M, N_s, N_p)``, VN<->CN messages are
``(N_s, N_p)``.  Exclusion sums are computed as a fixed-order total minus the
excluded term.
"""
import numpy as np

from .llr import bernoulli_variance, cn_llr, sigmoid, softplus

VARIANCE_FLOOR = 1e-12


def sn_update(H, Y, l_vs, sigma_sq, clamp):
    h = H[:, :, None]
    p = sigmoid(l_vs)
    mean_terms = h * p
    var_terms = h * h * bernoulli_variance(l_vs)
    u = mean_terms.sum(axis=1, keepdims=True) - mean_terms
    v = var_terms.sum(axis=1, keepdims=True) - var_terms + sigma_sq
    v = np.maximum(v, max(sigma_sq, VARIANCE_FLOOR))
    l_s = (2.0 * (Y[:, None, :] - u) * h - h * h) / (2.0 * v)
    return np.clip(l_s, -clamp, clamp)


def cn_update(l_vc, p_a, clamp):
    if p_a <= 0.0:
        return np.full(l_vc.shape, -clamp)
    sp = softplus(l_vc)
    rest = np.maximum(sp.sum(axis=1, keepdims=True) - sp, 0.0)
    return cn_llr(np.log(p_a) - rest, clamp)


def vn_update(l_s, l_c, prior, clamp):
    total = l_s.sum(axis=0)
    l_vs = (total[None, :, :] - l_s) + prior + l_c[None, :, :]
    l_vc = total + prior
    return np.clip(l_vs, -clamp, clamp), np.clip(l_vc, -clamp, clamp)


def output_llrs(l_s, l_c, prior):
    return (l_s.sum(axis=0) + prior) + l_c
