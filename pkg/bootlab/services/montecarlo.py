"""
Monte Carlo estimation under the product measure P_p.

Trial t of a campaign with master seed s draws its per-cell uniforms from a
Philox stream keyed by (s, t). The sampled set at density p is
{c : U_c < p}, so one uniform array serves every p and indicators of
increasing events are monotone in p trial by trial.
"""

import logging
import math
from functools import partial
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from bootlab.core.config import settings
from bootlab.core.errors import domain_error
from bootlab.services.engine import closure, crossed, diam, percolates
from bootlab.services.lattice import CellSet, LatticeSpec, Rect, validate_cell
from bootlab.services.structure import gamma_set
from bootlab.services.worker import run_trials

logger = logging.getLogger("Bootlab.MonteCarlo")

Z95 = 1.96


# --- Reports ---


class TrialReport(BaseModel):
    estimate: float = Field(ge=0.0, le=1.0)
    half_width: float = Field(ge=0.0)
    successes: int = Field(ge=0)
    trials: int = Field(ge=1)
    master_seed: int
    p: float

    @model_validator(mode="after")
    def check_counts(self) -> "TrialReport":
        if self.successes > self.trials:
            raise ValueError("successes cannot exceed trials")
        return self

    @classmethod
    def from_counts(cls, successes: int, trials: int, master_seed: int, p: float) -> "TrialReport":
        estimate = successes / trials
        return cls(
            estimate=estimate,
            half_width=Z95 * math.sqrt(estimate * (1.0 - estimate) / trials),
            successes=successes,
            trials=trials,
            master_seed=master_seed,
            p=p,
        )

    def csv_row(self) -> List:
        return [self.p, self.estimate, self.half_width, self.trials, self.master_seed]


class MeanReport(BaseModel):
    mean: float
    std_error: float = Field(ge=0.0)
    half_width: float = Field(ge=0.0)
    trials: int = Field(ge=1)
    master_seed: int
    p: float

    @classmethod
    def from_samples(cls, samples: Sequence[float], master_seed: int, p: float) -> "MeanReport":
        values = np.asarray(samples, dtype=float)
        spread = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        std_error = spread / math.sqrt(len(values))
        return cls(
            mean=float(values.mean()),
            std_error=std_error,
            half_width=Z95 * std_error,
            trials=len(values),
            master_seed=master_seed,
            p=p,
        )


class PcEstimate(BaseModel):
    p_lo: float
    p_hi: float
    p_mid: float
    trials_per_probe: int
    target: float
    master_seed: int
    probes: int

    @model_validator(mode="after")
    def check_bracket(self) -> "PcEstimate":
        if not self.p_lo < self.p_mid < self.p_hi:
            raise ValueError(f"Bracket [{self.p_lo}, {self.p_hi}] does not contain {self.p_mid}")
        return self


# --- Streams and sampling ---


def trial_stream(master_seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial; independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(trial,))))


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise domain_error(f"p must lie in [0, 1], got {p}")


def sample_set(spec: LatticeSpec, p: float, stream: np.random.Generator) -> CellSet:
    """Bernoulli(p) subset of the lattice drawn from stream."""
    _check_p(p)
    return CellSet(stream.random(spec.shape) < p)


def trial_uniforms(spec: LatticeSpec, master_seed: int, trial: int) -> np.ndarray:
    return trial_stream(master_seed, trial).random(spec.shape)


def _check_trials(trials: int) -> None:
    if trials < 1:
        raise domain_error(f"trials must be at least 1, got {trials}")


# --- Per-trial tasks (module level so they pickle) ---


def _percolation_trial(spec: LatticeSpec, p: float, master_seed: int, trial: int) -> bool:
    return percolates(spec, CellSet(trial_uniforms(spec, master_seed, trial) < p))


def _coupled_trial(spec: LatticeSpec, ps: Sequence[float], master_seed: int, trial: int) -> List[bool]:
    uniforms = trial_uniforms(spec, master_seed, trial)
    return [percolates(spec, CellSet(uniforms < p)) for p in ps]


def _crossing_trial(
    spec: LatticeSpec,
    rect: Rect,
    p: float,
    axis: int,
    forced: Optional[CellSet],
    master_seed: int,
    trial: int,
) -> bool:
    a = CellSet(trial_uniforms(spec, master_seed, trial) < p)
    return crossed(spec, rect, a, axis, forced)


def _diam_trial(spec: LatticeSpec, p: float, threshold_len: int, master_seed: int, trial: int) -> bool:
    a = CellSet(trial_uniforms(spec, master_seed, trial) < p)
    return diam(spec, closure(spec, a).closure) >= threshold_len


def _gamma_trial(spec: LatticeSpec, p: float, m: int, x, master_seed: int, trial: int) -> int:
    a = CellSet(trial_uniforms(spec, master_seed, trial) < p)
    return len(gamma_set(spec, a, m, x))


# --- Estimators ---


def percolation_prob(
    spec: LatticeSpec,
    p: float,
    trials: int,
    master_seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> TrialReport:
    """Fraction of trials whose sampled set percolates."""
    _check_p(p)
    _check_trials(trials)
    seed = settings.DEFAULT_SEED if master_seed is None else master_seed
    hits = run_trials(partial(_percolation_trial, spec, p, seed), trials, "percolation", workers)
    return TrialReport.from_counts(sum(hits), trials, seed, p)


def coupled_indicators(
    spec: LatticeSpec,
    ps: Sequence[float],
    trials: int,
    master_seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> np.ndarray:
    """Percolation indicators, shape (len(ps), trials), sharing uniforms across ps."""
    for p in ps:
        _check_p(p)
    _check_trials(trials)
    seed = settings.DEFAULT_SEED if master_seed is None else master_seed
    rows = run_trials(partial(_coupled_trial, spec, list(ps), seed), trials, "coupled", workers)
    return np.asarray(rows, dtype=bool).reshape(trials, len(ps)).T


def pc_estimate(
    spec: LatticeSpec,
    trials_per_probe: int,
    tol: float,
    master_seed: Optional[int] = None,
    target: float = 0.5,
    workers: Optional[int] = None,
) -> PcEstimate:
    """Bisect p until the percolation fraction crosses target inside [p_lo, p_hi].

    Every probe reuses the same trial streams, so the fraction is monotone
    in p and the bracket keeps F(p_lo) < target <= F(p_hi).
    """
    _check_trials(trials_per_probe)
    if not tol > 0:
        raise domain_error(f"tol must be positive, got {tol}")
    if not 0.0 < target <= 1.0:
        raise domain_error(f"target must lie in (0, 1], got {target}")
    seed = settings.DEFAULT_SEED if master_seed is None else master_seed
    lo, hi = 0.0, 1.0
    probes = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        report = percolation_prob(spec, mid, trials_per_probe, seed, workers)
        probes += 1
        if report.estimate >= target:
            hi = mid
        else:
            lo = mid
        logger.debug(f"[PC] probe {probes}: p = {mid:.6g}, F = {report.estimate:.4f}, bracket [{lo:.6g}, {hi:.6g}]")
    logger.info(f"[PC] p_c in [{lo:.6g}, {hi:.6g}] after {probes} probes")
    return PcEstimate(
        p_lo=lo,
        p_hi=hi,
        p_mid=0.5 * (lo + hi),
        trials_per_probe=trials_per_probe,
        target=target,
        master_seed=seed,
        probes=probes,
    )


def crossing_prob(
    spec: LatticeSpec,
    rect: Rect,
    p: float,
    axis: int,
    trials: int,
    master_seed: Optional[int] = None,
    forced: Optional[CellSet] = None,
    workers: Optional[int] = None,
) -> TrialReport:
    """Probability of the crossing event of rect in direction axis, with forced cells added."""
    _check_p(p)
    _check_trials(trials)
    rect.within(spec)
    if not 1 <= axis <= spec.d:
        raise domain_error(f"Axis {axis} not in [1, {spec.d}]")
    seed = settings.DEFAULT_SEED if master_seed is None else master_seed
    hits = run_trials(
        partial(_crossing_trial, spec, rect, p, axis, forced, seed), trials, "crossing", workers
    )
    return TrialReport.from_counts(sum(hits), trials, seed, p)


def diam_event_prob(
    spec: LatticeSpec,
    p: float,
    threshold_len: int,
    trials: int,
    master_seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> TrialReport:
    """Probability that diam([A]) >= threshold_len."""
    _check_p(p)
    _check_trials(trials)
    if threshold_len < 1:
        raise domain_error(f"threshold_len must be at least 1, got {threshold_len}")
    seed = settings.DEFAULT_SEED if master_seed is None else master_seed
    hits = run_trials(partial(_diam_trial, spec, p, threshold_len, seed), trials, "diam-event", workers)
    return TrialReport.from_counts(sum(hits), trials, seed, p)


def gamma_expectation(
    spec: LatticeSpec,
    p: float,
    m: int,
    x,
    trials: int,
    master_seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> MeanReport:
    """Monte Carlo mean of |Gamma(A, m, x)|."""
    _check_p(p)
    _check_trials(trials)
    cell = validate_cell(spec, x)
    if m < 1:
        raise domain_error(f"m must be positive, got {m}")
    seed = settings.DEFAULT_SEED if master_seed is None else master_seed
    sizes = run_trials(partial(_gamma_trial, spec, p, m, cell, seed), trials, "gamma", workers)
    return MeanReport.from_samples(sizes, seed, p)
