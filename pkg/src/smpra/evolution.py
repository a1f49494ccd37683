"""Mean-tracking analysis of SMP iterations and EXIT-style convergence checks.

Only the means of the LLR messages are tracked, split by VN type: "positive"
VNs (s=1) and "negative" VNs (s=0).  Expectations are moved inside the
nonlinearities, so this is an approximation of the simulated dynamics.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .llr import bernoulli_variance, clamp_prior, cn_llr, softplus
from .model import SystemConfig, effective_noise_variance

CONVERGED = "converged"
DIVERGED = "diverged"


@dataclass(frozen=True)
class EvolutionParams:
    N_s: int
    N_p: int
    M: int
    p_a: float
    sigma_eff_sq: float
    max_iters: int = 50
    fixed_point_eps: float = 1e-6
    llr_clamp: float = 30.0

    def __post_init__(self):
        for name in ("N_s", "N_p", "M", "max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.p_a <= 1.0:
            raise ValueError("p_a must lie in [0, 1]")
        if self.sigma_eff_sq < 0:
            raise ValueError("sigma_eff_sq must be nonnegative")

    @property
    def p_0(self):
        return self.p_a / self.N_p

    @property
    def prior_llr(self):
        return clamp_prior(self.p_0, self.llr_clamp)

    @classmethod
    def from_config(cls, config: SystemConfig, **kwargs) -> "EvolutionParams":
        return cls(N_s=config.N_s, N_p=config.N_p, M=config.M, p_a=config.p_a,
                   sigma_eff_sq=effective_noise_variance(config.snr_db, config.N_c), **kwargs)


@dataclass
class EvolutionState:
    e_s_pos: float = 0.0
    e_s_neg: float = 0.0
    e_vs_pos: float = 0.0
    e_vs_neg: float = 0.0
    e_vc_pos: float = 0.0
    e_vc_neg: float = 0.0
    e_c_pos: float = 0.0
    e_c_neg_ac: float = 0.0
    e_c_neg_ina: float = 0.0
    e_c_neg: float = 0.0
    iter: int = 0
    neg_cn_undefined: bool = False


@dataclass
class Trajectory:
    states: list
    converged: bool

    @property
    def final(self) -> EvolutionState:
        return self.states[-1]


@dataclass
class ExitCurve:
    points: list = field(default_factory=list)

    @property
    def a_priori(self):
        return np.array([p[0] for p in self.points])

    @property
    def extrinsic(self):
        return np.array([p[1] for p in self.points])


def initial_state(params: EvolutionParams) -> EvolutionState:
    """Every VN output at the prior LLR, SN/CN outputs zero (as in the simulator)."""
    lb = params.prior_llr
    return EvolutionState(e_vs_pos=lb, e_vs_neg=lb, e_vc_pos=lb, e_vc_neg=lb)


def vn_mean_update(state: EvolutionState, params: EvolutionParams) -> EvolutionState:
    lb, c, M = params.prior_llr, params.llr_clamp, params.M
    state.e_vs_pos = float(np.clip((M - 1) * state.e_s_pos + lb + state.e_c_pos, -c, c))
    state.e_vs_neg = float(np.clip((M - 1) * state.e_s_neg + lb + state.e_c_neg, -c, c))
    state.e_vc_pos = float(np.clip(M * state.e_s_pos + lb, -c, c))
    state.e_vc_neg = float(np.clip(M * state.e_s_neg + lb, -c, c))
    return state


def _log_pa(p_a):
    return -math.inf if p_a <= 0 else math.log(p_a)


def cn_mean_update(state: EvolutionState, params: EvolutionParams) -> EvolutionState:
    """CN means for positive VNs and for negative VNs of active/inactive devices.

    With ``N_p = 1`` there are no negative VNs; the negative branch is set to 0
    and ``neg_cn_undefined`` is raised.
    """
    c, Np, p_a = params.llr_clamp, params.N_p, params.p_a
    log_pa = _log_pa(p_a)
    sp_neg = float(softplus(state.e_vc_neg))
    sp_pos = float(softplus(state.e_vc_pos))
    state.e_c_pos = float(cn_llr(log_pa - (Np - 1) * sp_neg, c))
    if Np == 1:
        state.e_c_neg_ac = state.e_c_neg_ina = state.e_c_neg = 0.0
        state.neg_cn_undefined = True
        return state
    state.e_c_neg_ac = float(cn_llr(log_pa - (Np - 2) * sp_neg - sp_pos, c))
    state.e_c_neg_ina = float(cn_llr(log_pa - (Np - 1) * sp_neg, c))
    state.e_c_neg = p_a * state.e_c_neg_ac + (1.0 - p_a) * state.e_c_neg_ina
    return state


def _interference_denominator(a, b, params):
    # 2/(2 + e^-x + e^x) == 2 p q of a message with LLR x
    n = params.N_s - 1
    p0 = params.p_0
    return (2.0 * n * p0 * float(bernoulli_variance(a))
            + 2.0 * n * (1.0 - p0) * float(bernoulli_variance(b))
            + 2.0 * params.sigma_eff_sq)


def sn_mean_update(state: EvolutionState, params: EvolutionParams) -> EvolutionState:
    denom = _interference_denominator(state.e_vs_pos, state.e_vs_neg, params)
    value = params.llr_clamp if denom <= 0 else min(1.0 / denom, params.llr_clamp)
    state.e_s_pos = value
    state.e_s_neg = -value
    return state


def sn_mean_negative(state: EvolutionState, params: EvolutionParams) -> float:
    """Negative-VN SN mean evaluated on its own, with ``s = 0`` in the SN rule.

    The signal term drops out, leaving ``E[-h^2] / denominator`` with
    ``E[h^2] = 1``.
    """
    denom = _interference_denominator(state.e_vs_pos, state.e_vs_neg, params)
    mean_h_sq = 1.0
    if denom <= 0:
        return -params.llr_clamp
    return max(-mean_h_sq / denom, -params.llr_clamp)


def output_means(state: EvolutionState, params: EvolutionParams):
    """Mean output LLR of positive and negative VNs for the current state."""
    lb, M = params.prior_llr, params.M
    return (M * state.e_s_pos + lb + state.e_c_pos,
            M * state.e_s_neg + lb + state.e_c_neg)


def run_evolution(params: EvolutionParams) -> Trajectory:
    """Iterate SN -> CN -> VN means from the prior state until ``e_s_pos`` settles."""
    state = initial_state(params)
    states = [replace(state)]
    converged = False
    for it in range(1, params.max_iters + 1):
        prev = state.e_s_pos
        sn_mean_update(state, params)
        cn_mean_update(state, params)
        vn_mean_update(state, params)
        state.iter = it
        states.append(replace(state))
        if abs(state.e_s_pos - prev) < params.fixed_point_eps:
            converged = True
            break
    return Trajectory(states=states, converged=converged)


def exit_transfer(x: float, params: EvolutionParams) -> float:
    """SN output mean produced by one pass when every SN output has mean ``+-x``.

    VN->CN messages are formed from ``x``, the CN responds, and the VN->SN
    messages then carry both; fixed points of this map are exactly the fixed
    points of ``run_evolution``.
    """
    state = EvolutionState(e_s_pos=x, e_s_neg=-x)
    vn_mean_update(state, params)
    cn_mean_update(state, params)
    vn_mean_update(state, params)
    sn_mean_update(state, params)
    return state.e_s_pos


def default_grid(params: EvolutionParams, points: int = 200):
    return np.logspace(-3.0, math.log10(params.llr_clamp), points)


def exit_curve(params: EvolutionParams, grid=None) -> ExitCurve:
    if grid is None:
        grid = default_grid(params)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonnegative and strictly increasing")
    return ExitCurve(points=[(float(x), exit_transfer(float(x), params)) for x in grid])


def classify_convergence(curve: ExitCurve) -> str:
    """``"diverged"`` iff the curve dips below ``y = x`` on some interval starting
    at A and the largest extrinsic value seen before A exceeds A.
    """
    if len(curve.points) < 3:
        raise ValueError("need at least 3 curve points")
    x, y = curve.a_priori, curve.extrinsic
    below = y < x
    i = 0
    while i < len(x):
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(x) and below[j + 1]:
            j += 1
        if i > 0 and y[:i].max() > x[i]:
            return DIVERGED
        i = j + 1
    return CONVERGED


EVOLUTION_COLUMNS = ("iter", "e_s_pos", "e_c_pos", "e_c_neg", "e_vc_pos", "e_vc_neg",
                     "e_vs_pos", "e_vs_neg")


def write_evolution_csv(trajectory: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVOLUTION_COLUMNS)
        for st in trajectory.states:
            writer.writerow([st.iter] + [repr(float(getattr(st, k))) for k in EVOLUTION_COLUMNS[1:]])


def write_exit_csv(curve: ExitCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a_priori", "extrinsic"])
        for a, e in curve.points:
            writer.writerow([repr(a), repr(e)])
