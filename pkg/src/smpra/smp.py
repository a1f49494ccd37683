"""Sparse message passing (SMP) estimation of the user-preamble indicator matrix.

The factor graph has one sum node (SN) per received entry ``y[m, p]``, one
variable node (VN) per indicator entry ``s[s, p]`` and one check node (CN)
per device enforcing "at most one preamble".  Messages are LLRs of the
Bernoulli variables.  One flooding iteration runs SN -> CN -> VN and then
forms the output LLRs.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .llr import clamp_prior
from .model import Instance, SystemConfig


@dataclass(frozen=True)
class SmpParams:
    max_iters: int = 20
    convergence_eps: float = 1e-4
    llr_clamp: float = 30.0

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.convergence_eps > 0:
            raise ValueError("convergence_eps must be > 0")
        if not (math.isfinite(self.llr_clamp) and self.llr_clamp >= 10):
            raise ValueError("llr_clamp must be finite and >= 10")


@dataclass
class MessageState:
    l_vs: np.ndarray  # VN -> SN, (M, N_s, N_p)
    l_s: np.ndarray   # SN -> VN, (M, N_s, N_p)
    l_vc: np.ndarray  # VN -> CN, (N_s, N_p)
    l_c: np.ndarray   # CN -> VN, (N_s, N_p)
    prior_llr: float
    p_a: float
    clamp: float = 30.0
    iter: int = 0


@dataclass
class EstimateResult:
    output_llr: np.ndarray
    S_hat: np.ndarray
    iters_run: int
    converged: bool
    per_iter_eer: list | None = None
    per_iter_mean_abs_llr: list = field(default_factory=list)


def init_messages(config: SystemConfig, sigma_eff_sq: float | None = None,
                  clamp: float = 30.0) -> MessageState:
    """All VN outputs start at the prior LLR; SN and CN outputs start at zero.

    ``sigma_eff_sq`` is accepted for interface symmetry; initialization does not
    depend on it.
    """
    prior = clamp_prior(config.p_0, clamp)
    M, Ns, Np = config.M, config.N_s, config.N_p
    return MessageState(
        l_vs=np.full((M, Ns, Np), prior),
        l_s=np.zeros((M, Ns, Np)),
        l_vc=np.full((Ns, Np), prior),
        l_c=np.zeros((Ns, Np)),
        prior_llr=prior,
        p_a=config.p_a,
        clamp=clamp,
    )


def sn_update(state: MessageState, H, Y, sigma_eff_sq: float, backend=None) -> np.ndarray:
    """Sum-node update.

    Interference from the other devices on ``y[m, p]`` is treated as Gaussian
    with mean ``u`` and variance ``v`` built from the incoming Bernoulli
    messages, giving ``l_s = (2 (y - u) h - h^2) / (2 v)``.
    """
    state.l_s = kernels.sn_update(H, Y, state.l_vs, sigma_eff_sq, state.clamp, backend)
    return state.l_s


def cn_update(state: MessageState, p_a: float | None = None, backend=None) -> np.ndarray:
    """Check-node update: ``p_c = p_a * prod_{k != p} q_vc[k]``, in LLR form."""
    if p_a is None:
        p_a = state.p_a
    state.l_c = kernels.cn_update(state.l_vc, p_a, state.clamp, backend)
    return state.l_c


def vn_update(state: MessageState, backend=None):
    state.l_vs, state.l_vc = kernels.vn_update(state.l_s, state.l_c, state.prior_llr,
                                               state.clamp, backend)
    return state.l_vs, state.l_vc


def output_llrs(state: MessageState, backend=None) -> np.ndarray:
    return kernels.output_llrs(state.l_s, state.l_c, state.prior_llr, backend)


def decide(output_llr) -> np.ndarray:
    """Hard decision: 1 where the LLR is nonnegative."""
    return (np.asarray(output_llr) >= 0).astype(float)


def run_smp(instance: Instance, params: SmpParams | None = None, *, record_eer: bool = False,
            clamp: bool = True, backend=None) -> EstimateResult:
    """Iterate until the output LLRs move less than ``convergence_eps`` or
    ``max_iters`` is hit.  ``clamp=False`` disables message saturation (testing only).
    """
    if params is None:
        params = SmpParams()
    clamp_value = params.llr_clamp if clamp else math.inf
    state = init_messages(instance.config, instance.sigma_eff_sq, clamp_value)
    H, Y = instance.H, instance.Y
    eers = [] if record_eer else None
    mean_abs = []
    prev = None
    converged = False
    for it in range(1, params.max_iters + 1):
        sn_update(state, H, Y, instance.sigma_eff_sq, backend)
        cn_update(state, backend=backend)
        vn_update(state, backend)
        out = output_llrs(state, backend)
        state.iter = it
        mean_abs.append(float(np.mean(np.abs(out))))
        if record_eer:
            eers.append(float(np.mean(decide(out) != instance.S)))
        if prev is not None and np.max(np.abs(out - prev)) < params.convergence_eps:
            converged = True
            break
        prev = out
    return EstimateResult(output_llr=out, S_hat=decide(out), iters_run=state.iter,
                          converged=converged, per_iter_eer=eers,
                          per_iter_mean_abs_llr=mean_abs)


def write_trace(result: EstimateResult, path) -> None:
    """Per-iteration CSV: ``iter,mean_abs_llr,eer`` (eer blank without ground truth)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "mean_abs_llr", "eer"])
        for i, mean_abs in enumerate(result.per_iter_mean_abs_llr):
            eer = "" if result.per_iter_eer is None else repr(result.per_iter_eer[i])
            writer.writerow([i + 1, repr(mean_abs), eer])


# Probability-domain updates, written directly from the Bernoulli-message
# definitions.  Used as an independent oracle for the LLR kernels.

def _gauss_pdf(x, u, v):
    return math.exp(-(x - u) ** 2 / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)


def _check_probs(values):
    for p in values:
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability inputs must lie strictly in (0, 1), got {p!r}")


def prob_oracle_update(kind: str, **inputs) -> float:
    """Probability that the target Bernoulli variable is 1 after one update.

    kinds and their inputs:

    ``sn``        y, h_self, h_others, p_others, sigma_sq
    ``vn_to_sn``  p_bar, p_c, p_s_others   (SN messages from the other antennas)
    ``vn_to_cn``  p_bar, p_s               (SN messages from all antennas)
    ``cn``        p_a, p_vc_others         (VN messages of the other preambles)
    ``output``    p_bar, p_c, p_s
    """
    if kind == "sn":
        h_o = np.asarray(inputs["h_others"], dtype=float)
        p_o = np.asarray(inputs["p_others"], dtype=float)
        _check_probs(p_o)
        u = float(np.sum(h_o * p_o))
        v = float(np.sum(h_o**2 * p_o * (1.0 - p_o))) + inputs["sigma_sq"]
        y, h = inputs["y"], inputs["h_self"]
        f0 = _gauss_pdf(y, u, v)
        f1 = _gauss_pdf(y, u + h, v)
        return 1.0 / (1.0 + f0 / f1)
    if kind in ("vn_to_sn", "output"):
        p_bar, p_c = inputs["p_bar"], inputs["p_c"]
        p_s = np.asarray(inputs["p_s_others" if kind == "vn_to_sn" else "p_s"], dtype=float)
        _check_probs([p_bar, p_c, *p_s])
        one = p_bar * p_c * np.prod(p_s)
        zero = (1.0 - p_bar) * (1.0 - p_c) * np.prod(1.0 - p_s)
        return float(one / (one + zero))
    if kind == "vn_to_cn":
        p_bar = inputs["p_bar"]
        p_s = np.asarray(inputs["p_s"], dtype=float)
        _check_probs([p_bar, *p_s])
        one = p_bar * np.prod(p_s)
        zero = (1.0 - p_bar) * np.prod(1.0 - p_s)
        return float(one / (one + zero))
    if kind == "cn":
        p_vc = np.asarray(inputs["p_vc_others"], dtype=float)
        _check_probs([inputs["p_a"], *p_vc])
        return float(inputs["p_a"] * np.prod(1.0 - p_vc))
    raise ValueError(f"unknown update kind {kind!r}")
