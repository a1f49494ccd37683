"""Seeded Monte-Carlo sweeps of the estimation error rate (EER)."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baselines import DEFAULT_THRESHOLD, cn_constrain, lmmse_estimate, mf_estimate
from .model import SystemConfig, generate_instance
from .smp import SmpParams, run_smp

log = logging.getLogger(__name__)

SWEEP_PARAMS = ("M", "N_s", "snr_db", "p_a", "N_p")
INT_PARAMS = ("M", "N_s", "N_p")
ESTIMATORS = ("smp", "mf", "lmmse")
CSV_HEADER = ("sweep_param", "sweep_value", "estimator", "iteration", "eer", "stderr", "trials")
FINAL = "final"


@dataclass
class ExperimentSpec:
    base: SystemConfig
    sweep_param: str = "M"
    sweep_values: list = field(default_factory=list)
    trials: int = 100
    estimators: tuple = ESTIMATORS
    smp_params: SmpParams = field(default_factory=SmpParams)
    record_per_iteration: bool = False
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.sweep_param not in SWEEP_PARAMS:
            raise ValueError(f"sweep_param must be one of {SWEEP_PARAMS}, got {self.sweep_param!r}")
        if not self.sweep_values:
            self.sweep_values = [getattr(self.base, self.sweep_param)]
        if self.sweep_param in INT_PARAMS:
            self.sweep_values = [int(v) for v in self.sweep_values]
        else:
            self.sweep_values = [float(v) for v in self.sweep_values]
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        self.estimators = tuple(self.estimators)
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ValueError(f"estimators must be a nonempty subset of {ESTIMATORS}, got {bad}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimators"] = list(self.estimators)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        data["base"] = SystemConfig.from_dict(data["base"])
        if "smp_params" in data:
            data["smp_params"] = SmpParams(**data["smp_params"])
        return cls(**data)


@dataclass(frozen=True)
class EerRow:
    sweep_param: str
    sweep_value: float
    estimator: str
    iteration: int | str
    eer: float
    stderr: float
    trials: int


@dataclass
class EerReport:
    rows: list = field(default_factory=list)

    def get(self, sweep_value, estimator, iteration=FINAL) -> EerRow:
        for row in self.rows:
            if row.sweep_value == sweep_value and row.estimator == estimator and row.iteration == iteration:
                return row
        raise KeyError((sweep_value, estimator, iteration))


def compute_eer(S_hat, S) -> float:
    """Fraction of indicator entries decided wrongly."""
    S_hat = np.asarray(S_hat)
    S = np.asarray(S)
    if S_hat.shape != S.shape:
        raise ValueError(f"shape mismatch {S_hat.shape} vs {S.shape}")
    return float(np.count_nonzero((S_hat != 0) != (S != 0))) / S.size


def derive_trial_seed(master: int, sweep_index: int, trial_index: int) -> int:
    """64-bit seed for one trial, independent of every other (sweep, trial) pair."""
    ss = np.random.SeedSequence(master, spawn_key=(sweep_index, trial_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(config: SystemConfig, spec: ExperimentSpec) -> dict:
    """EERs of each selected estimator on one instance.

    The ``smp`` entry is a list of per-iteration EERs (padded to ``max_iters``
    with the value at convergence).  A failed estimator maps to ``None``.
    """
    instance = generate_instance(config)
    out = {}
    for name in spec.estimators:
        try:
            if name == "smp":
                res = run_smp(instance, spec.smp_params, record_eer=True)
                eers = list(res.per_iter_eer)
                eers += [eers[-1]] * (spec.smp_params.max_iters - len(eers))
                out[name] = eers
            else:
                soft = mf_estimate(instance) if name == "mf" else lmmse_estimate(instance)
                out[name] = compute_eer(cn_constrain(soft, spec.threshold), instance.S)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            log.warning("estimator %s failed on seed %d: %s", name, config.seed, exc)
            out[name] = None
    return out


def _trial_task(args):
    config, spec = args
    return run_trial(config, spec)


def _mean_stderr(values):
    arr = np.asarray(values, dtype=float)
    mean = float(np.mean(arr))
    stderr = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, stderr


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> EerReport:
    """Run every (sweep value, trial) pair; trials may run in parallel processes,
    results are reduced in trial order so the report does not depend on ``workers``.
    """
    tasks = []
    for si, value in enumerate(spec.sweep_values):
        for t in range(spec.trials):
            cfg = replace(spec.base, **{spec.sweep_param: value,
                                         "seed": derive_trial_seed(spec.base.seed, si, t)})
            tasks.append((cfg, spec))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_trial_task(t) for t in tasks]

    report = EerReport()
    for si, value in enumerate(spec.sweep_values):
        chunk = results[si * spec.trials:(si + 1) * spec.trials]
        for name in spec.estimators:
            ok = [r[name] for r in chunk if r[name] is not None]
            if not ok:
                continue
            if name == "smp":
                per_iter = np.asarray(ok, dtype=float)
                if spec.record_per_iteration:
                    for it in range(per_iter.shape[1]):
                        mean, se = _mean_stderr(per_iter[:, it])
                        report.rows.append(EerRow(spec.sweep_param, value, name, it + 1, mean, se, len(ok)))
                mean, se = _mean_stderr(per_iter[:, -1])
            else:
                mean, se = _mean_stderr(ok)
            report.rows.append(EerRow(spec.sweep_param, value, name, FINAL, mean, se, len(ok)))
    return report


def emit_csv(report: EerReport, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in report.rows:
                writer.writerow([r.sweep_param, repr(r.sweep_value), r.estimator, r.iteration,
                                 repr(r.eer), repr(r.stderr), r.trials])
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_csv(path) -> EerReport:
    report = EerReport()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for rec in reader:
            param = rec["sweep_param"]
            value = int(rec["sweep_value"]) if param in INT_PARAMS else float(rec["sweep_value"])
            it = rec["iteration"]
            report.rows.append(EerRow(param, value, rec["estimator"],
                                      FINAL if it == FINAL else int(it),
                                      float(rec["eer"]), float(rec["stderr"]), int(rec["trials"])))
    return report


def parse_sweep(text: str):
    """``PARAM=V1:STEP:V2`` (inclusive) or ``PARAM=a,b,c`` -> (param, values)."""
    aliases = {"m": "M", "ns": "N_s", "n_s": "N_s", "np": "N_p", "n_p": "N_p",
               "snr": "snr_db", "snr_db": "snr_db", "snr-db": "snr_db", "pa": "p_a", "p_a": "p_a"}
    try:
        name, rng = text.split("=", 1)
    except ValueError:
        raise ValueError(f"sweep must look like PARAM=V1:STEP:V2, got {text!r}") from None
    param = aliases.get(name.strip().lower(), name.strip())
    if param not in SWEEP_PARAMS:
        raise ValueError(f"cannot sweep {name!r}; choose from {SWEEP_PARAMS}")
    if ":" in rng:
        parts = [float(v) for v in rng.split(":")]
        if len(parts) != 3 or parts[1] == 0:
            raise ValueError(f"bad range {rng!r}")
        start, step, stop = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ValueError(f"empty range {rng!r}")
        values = [start + k * step for k in range(n)]
    else:
        values = [float(v) for v in rng.split(",")]
    if param in INT_PARAMS:
        values = [int(round(v)) for v in values]
    else:
        values = [round(v, 12) for v in values]
    return param, values


def load_spec(path) -> ExperimentSpec:
    with open(path) as fh:
        return ExperimentSpec.from_dict(json.load(fh))
