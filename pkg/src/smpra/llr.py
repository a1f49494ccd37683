"""Numerically stable LLR arithmetic shared by the estimator and the analyzer."""
import numpy as np

# Below this the CN correction term -log1p(-e^x) is under 1e-13 and is dropped.
CN_SHORTCUT = -30.0


def sigmoid(x):
    """Logistic map LLR -> probability, without overflow for large |x|."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def bernoulli_variance(x):
    """``p * q`` of a Bernoulli message given its LLR; equals ``1 / (2 + e^x + e^-x)``."""
    e = np.exp(-np.abs(np.asarray(x, dtype=float)))
    return e / (1.0 + e) ** 2


def softplus(x):
    """``log(1 + e^x)``."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def logit(p):
    p = np.asarray(p, dtype=float)
    return np.log(p) - np.log1p(-p)


def clamp_prior(p, clamp):
    """LLR of a prior probability, saturating at ``+-clamp`` for p in {0, 1}."""
    if p <= 0.0:
        return -clamp
    if p >= 1.0:
        return clamp
    return float(np.clip(np.log(p) - np.log1p(-p), -clamp, clamp))


def cn_llr(log_p, clamp):
    """Convert ``log p`` of a check-node message into its LLR.

    Evaluates ``-log(e^{-log_p} - 1) = log_p - log1p(-e^{log_p})``.  ``log_p >= 0``
    (certain activity) maps to ``+clamp``.
    """
    lp = np.asarray(log_p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.minimum(lp, -1e-300)
        full = lp - np.log1p(-np.exp(safe))
    out = np.where(lp < CN_SHORTCUT, lp, full)
    out = np.where(lp >= 0.0, np.inf, out)
    return np.clip(out, -clamp, clamp)
