"""Random-access scenario generation.

Devices activate independently, pick one preamble uniformly, and their
signals superimpose at an ``M``-antenna base station.  Estimation works on
the despread model ``Y = H S + N`` with ``N`` of variance ``sigma_n^2 / N_c``;
the waveform path (``synthesize_waveform`` + ``despread``) is only there to
check that reduction.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.linalg import hadamard

# Fixed substream labels so each random component is drawn independently.
STREAM_LABELS = {"indicator": 0, "channel": 1, "noise": 2}


class InfeasiblePreamblesError(ValueError):
    """No real orthogonal preamble set exists for the requested sizes."""


@dataclass(frozen=True)
class SystemConfig:
    M: int
    N_s: int
    N_p: int
    N_c: int
    p_a: float
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        for name in ("M", "N_s", "N_p", "N_c"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not 0.0 <= self.p_a <= 1.0:
            raise ValueError(f"p_a must lie in [0, 1], got {self.p_a!r}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "p_a", float(self.p_a))
        object.__setattr__(self, "snr_db", float(self.snr_db))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def p_0(self) -> float:
        """Probability that a single indicator entry is 1."""
        return self.p_a / self.N_p

    @property
    def sigma_eff_sq(self) -> float:
        return effective_noise_variance(self.snr_db, self.N_c)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown SystemConfig fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Instance:
    config: SystemConfig
    H: np.ndarray
    S: np.ndarray
    Y: np.ndarray
    sigma_eff_sq: float


def substream(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAM_LABELS[label],)))


def sample_indicator(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw the ``N_s x N_p`` user-preamble indicator matrix."""
    active = rng.random(config.N_s) < config.p_a
    choice = rng.integers(config.N_p, size=config.N_s)
    S = np.zeros((config.N_s, config.N_p))
    rows = np.flatnonzero(active)
    S[rows, choice[rows]] = 1.0
    return S


def sample_channel(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((config.M, config.N_s))


def effective_noise_variance(snr_db: float, N_c: int) -> float:
    """Noise variance after despreading, with unit symbol power.

    ``sigma_n^2 = 10^(-snr_db/10)`` per received chip, reduced ``N_c``-fold by
    correlating against a length-``N_c`` preamble.
    """
    if N_c < 1:
        raise ValueError("N_c must be >= 1")
    return 10.0 ** (-snr_db / 10.0) / N_c


def synthesize(config: SystemConfig, H, S, rng: np.random.Generator | None = None,
               sigma_eff_sq: float | None = None) -> Instance:
    """Form ``Y = H S + N`` with i.i.d. Gaussian ``N`` of variance ``sigma_eff_sq``."""
    H = np.asarray(H, dtype=float)
    S = np.asarray(S, dtype=float)
    if H.shape != (config.M, config.N_s):
        raise ValueError(f"H has shape {H.shape}, expected {(config.M, config.N_s)}")
    if S.shape != (config.N_s, config.N_p):
        raise ValueError(f"S has shape {S.shape}, expected {(config.N_s, config.N_p)}")
    if sigma_eff_sq is None:
        sigma_eff_sq = config.sigma_eff_sq
    if sigma_eff_sq < 0:
        raise ValueError("sigma_eff_sq must be nonnegative")
    Y = H @ S
    if sigma_eff_sq > 0:
        if rng is None:
            rng = substream(config.seed, "noise")
        Y = Y + math.sqrt(sigma_eff_sq) * rng.standard_normal(Y.shape)
    return Instance(config=config, H=H, S=S, Y=Y, sigma_eff_sq=float(sigma_eff_sq))


def generate_instance(config: SystemConfig, sigma_eff_sq: float | None = None) -> Instance:
    """Realize a full scenario from ``config.seed`` (bit-identical for equal configs)."""
    S = sample_indicator(config, substream(config.seed, "indicator"))
    H = sample_channel(config, substream(config.seed, "channel"))
    return synthesize(config, H, S, substream(config.seed, "noise"), sigma_eff_sq)


def build_preambles(N_p: int, N_c: int) -> np.ndarray:
    """First ``N_p`` rows of a Sylvester Hadamard matrix of order ``N_c``.

    Rows satisfy ``P @ P.T == N_c * I`` exactly.  ``N_c`` must be a power of two.
    """
    if N_p < 1 or N_c < 1:
        raise ValueError("N_p and N_c must be positive")
    if N_p > N_c:
        raise InfeasiblePreamblesError(
            f"{N_p} orthogonal preambles cannot have length {N_c}; "
            "use the despread model directly")
    if N_c & (N_c - 1):
        raise InfeasiblePreamblesError(f"N_c={N_c} is not a power of two")
    return hadamard(N_c).astype(float)[:N_p]


def _check_orthogonal(P: np.ndarray, tol: float = 1e-12) -> None:
    N_c = P.shape[1]
    err = np.max(np.abs(P @ P.T - N_c * np.eye(P.shape[0])))
    if err >= tol * max(N_c, 1):
        raise ValueError(f"preamble matrix is not orthogonal (max deviation {err:.3g})")


def synthesize_waveform(H, S, P, sigma_n_sq: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Chip-level received signal ``H S P + N``, ``M x N_c``."""
    H, S, P = (np.asarray(a, dtype=float) for a in (H, S, P))
    if H.shape[1] != S.shape[0] or S.shape[1] != P.shape[0]:
        raise ValueError(f"incompatible shapes H{H.shape}, S{S.shape}, P{P.shape}")
    Yw = H @ S @ P
    if sigma_n_sq > 0:
        if rng is None:
            raise ValueError("rng required for noisy synthesis")
        Yw = Yw + math.sqrt(sigma_n_sq) * rng.standard_normal(Yw.shape)
    return Yw


def despread(Y_waveform, P) -> np.ndarray:
    """Correlate each antenna's waveform with every preamble: ``Y P^T / N_c``."""
    Y_waveform = np.asarray(Y_waveform, dtype=float)
    P = np.asarray(P, dtype=float)
    if Y_waveform.shape[1] != P.shape[1]:
        raise ValueError(f"waveform length {Y_waveform.shape[1]} != preamble length {P.shape[1]}")
    _check_orthogonal(P)
    return Y_waveform @ P.T / P.shape[1]


def save_instance(instance: Instance, directory) -> None:
    """Write ``H.csv``, ``S.csv``, ``Y.csv`` and ``config.json`` into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    for name in ("H", "S", "Y"):
        np.savetxt(os.path.join(directory, f"{name}.csv"), getattr(instance, name),
                   delimiter=",", fmt="%.17g")
    meta = instance.config.to_dict()
    meta["sigma_eff_sq"] = instance.sigma_eff_sq
    with open(os.path.join(directory, "config.json"), "w") as fh:
        json.dump(meta, fh, indent=2)


def load_instance(directory) -> Instance:
    with open(os.path.join(directory, "config.json")) as fh:
        meta = json.load(fh)
    sigma_eff_sq = meta.pop("sigma_eff_sq", None)
    config = SystemConfig.from_dict(meta)
    arrays = {}
    for name, shape in (("H", (config.M, config.N_s)), ("S", (config.N_s, config.N_p)),
                        ("Y", (config.M, config.N_p))):
        arr = np.loadtxt(os.path.join(directory, f"{name}.csv"), delimiter=",", ndmin=2)
        arrays[name] = arr.reshape(shape)
    if sigma_eff_sq is None:
        sigma_eff_sq = config.sigma_eff_sq
    return Instance(config=config, sigma_eff_sq=float(sigma_eff_sq), **arrays)
