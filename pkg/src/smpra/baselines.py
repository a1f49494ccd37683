"""Linear baseline estimators followed by a per-device one-preamble constraint."""
import numpy as np
from scipy import linalg

from .model import Instance

DEFAULT_THRESHOLD = 0.5


def mf_estimate(instance: Instance) -> np.ndarray:
    """Per-device matched filter ``h_s . y_p / |h_s|^2``; zero-norm channels score 0."""
    H, Y = instance.H, instance.Y
    norms = np.einsum("ms,ms->s", H, H)
    corr = H.T @ Y
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return corr * scale[:, None]


def lmmse_estimate(instance: Instance) -> np.ndarray:
    """Bayesian LMMSE with i.i.d. prior mean ``p_0`` and variance ``p_0 (1 - p_0)``.

    ``p_0 + C H^T (C H H^T + sigma^2 I)^-1 (Y - p_0 H 1)``, solved as an
    ``M x M`` system.
    """
    H, Y = instance.H, instance.Y
    p0 = instance.config.p_0
    C = p0 * (1.0 - p0)
    M = H.shape[0]
    innovation = Y - p0 * H.sum(axis=1, keepdims=True)
    gram = C * (H @ H.T) + instance.sigma_eff_sq * np.eye(M)
    if instance.sigma_eff_sq > 0:
        z = linalg.solve(gram, innovation, assume_a="pos")
    else:
        z = linalg.lstsq(gram, innovation)[0]
    return p0 + C * (H.T @ z)


def cn_constrain(values, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Keep only each row's largest score, and only if it exceeds ``threshold``.

    Ties go to the lowest preamble index.
    """
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    best = np.argmax(values, axis=1)
    rows = np.arange(values.shape[0])
    keep = values[rows, best] > threshold
    out[rows[keep], best[keep]] = 1.0
    return out
