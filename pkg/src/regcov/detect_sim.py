"""Monte-Carlo adaptive-detection harness.

A training stream of complex white Gaussian batches is fed sequentially to a
regularized estimator, ``Sigma_m = reg(Sigma_{m-1}, batch_m)``. After a
burn-in the states are treated as draws from the stationary law of the
estimate. Each state then whitens a set of test cells. The cells hold unit
noise, plus for detection trials a Gaussian target along the steering
vector. Thresholds are calibrated on noise-only cells at a target
false-alarm rate, and detection probabilities are exceedance fractions.

Randomness is derived from ``(seed, purpose, index)`` tuples through a
counter-based generator (Philox). Results therefore do not depend on the
order in which states or cells are processed.
"""

from dataclasses import asdict, dataclass, field
import hashlib
import json
import math
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .estimators import EstimatorConfig, estimate
from .exceptions import EstimatorError, ValidationError

ESTIMATORS = {
    "RegTyler": "tyler",
    "RegPTyler": "ptyler",
    "RegCgCov": "cg",
    "RegPcgCov": "pcg",
    "RegScm": "scm",
    "RegPartialScm": "pscm",
}
TYLER_TYPE = {"RegTyler", "RegPTyler"}
DETECTORS = ("MF", "NMF")

# purpose tags for stream derivation
_TRAIN, _CONTAM, _CELLS = 1, 2, 3
_CALIBRATE, _DETECT, _RETEST = 11, 12, 13


def derive_rng(*keys):
    """Counter-based generator keyed by a tuple of non-negative integers."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in keys])))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return derive_rng(seed)


@dataclass(frozen=True)
class Scenario:
    """Description of one detection experiment.

    ``steering`` defaults to ``(1, ..., 1)/sqrt(d)``. ``detector="auto"``
    selects NMF for Tyler-type estimators and MF otherwise. ``contamination``
    is ``(rate, scale)`` and affects training batches of detection runs
    only; thresholds are always learned on clean training data.
    ``n_states`` stationary states are pooled per run and the trials are
    spread evenly over them.
    """

    d: int = 8
    n_train: int = 11
    alpha: float = 0.25
    p: float = 0.75
    estimator: str = "RegTyler"
    detector: str = "auto"
    steering: Optional[tuple] = None
    sinr_grid_db: tuple = (-40.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 40.0)
    pfa: float = 1e-2
    n_trials_pfa: int = 100_000
    n_trials_pd: int = 10_000
    burn_in: int = 50
    n_states: int = 500
    contamination: Optional[tuple] = None
    master_seed: int = 0

    def __post_init__(self):
        if self.d < 2 or self.n_train < 1:
            raise ValidationError("d must be >= 2 and n_train >= 1")
        if self.estimator not in ESTIMATORS:
            raise ValidationError(f"unknown estimator {self.estimator!r}; choose from {sorted(ESTIMATORS)}")
        if self.detector not in DETECTORS + ("auto",):
            raise ValidationError(f"detector must be one of MF, NMF, auto; got {self.detector!r}")
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 < self.p <= 1.0:
            raise ValidationError("alpha must lie in [0, 1] and p in (0, 1]")
        if not 0.0 < self.pfa < 1.0:
            raise ValidationError("pfa must lie in (0, 1)")
        if self.burn_in < 1 or self.n_states < 1:
            raise ValidationError("burn_in and n_states must be at least 1")
        if len(self.sinr_grid_db) == 0:
            raise ValidationError("sinr_grid_db must not be empty")
        if self.n_trials_pfa < 1 or self.n_trials_pd < 1:
            raise ValidationError("trial counts must be positive")
        object.__setattr__(self, "sinr_grid_db", tuple(float(x) for x in self.sinr_grid_db))
        if self.steering is not None:
            s = np.asarray(self.steering, dtype=complex)
            if s.shape != (self.d,):
                raise ValidationError(f"steering must have length d={self.d}")
            if abs(np.linalg.norm(s) - 1.0) > 1e-9:
                raise ValidationError("steering vector must have unit norm")
            object.__setattr__(self, "steering", tuple(complex(v) for v in s))
        if self.contamination is not None:
            rate, scale = self.contamination
            if not 0.0 <= rate < 1.0 or not scale > 1.0:
                raise ValidationError("contamination needs 0 <= rate < 1 and scale > 1")
            object.__setattr__(self, "contamination", (float(rate), float(scale)))

    @property
    def steering_vector(self):
        if self.steering is None:
            return np.ones(self.d, dtype=complex) / np.sqrt(self.d)
        return np.array(self.steering, dtype=complex)

    @property
    def detector_kind(self):
        if self.detector != "auto":
            return self.detector
        return "NMF" if self.estimator in TYLER_TYPE else "MF"

    @property
    def estimator_config(self):
        return EstimatorConfig(alpha=self.alpha, p=self.p)

    def to_dict(self):
        out = asdict(self)
        if self.steering is not None:
            out["steering"] = [[v.real, v.imag] for v in self.steering]
        out["sinr_grid_db"] = list(self.sinr_grid_db)
        if self.contamination is not None:
            out["contamination"] = list(self.contamination)
        return out

    def digest(self):
        """Content hash of the canonicalized scenario."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class CurvePoint:
    sinr_db: float
    pd: float
    trials: int
    threshold: float

    @property
    def std_error(self):
        return math.sqrt(max(self.pd * (1.0 - self.pd), 0.0) / self.trials)


@dataclass
class DetectionCurve:
    points: list
    scenario_hash: str
    seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def pd(self):
        return np.array([pt.pd for pt in self.points])

    @property
    def sinr_db(self):
        return np.array([pt.sinr_db for pt in self.points])

    def to_csv(self):
        lines = ["sinr_db,pd,trials,threshold"]
        for pt in self.points:
            lines.append(f"{pt.sinr_db!r},{pt.pd!r},{pt.trials},{pt.threshold!r}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# data generation
# --------------------------------------------------------------------------


def gen_noise(d, n, field="complex", seed=0):
    """``n`` i.i.d. zero-mean unit-covariance Gaussian vectors as rows.

    Complex draws are circular: each entry is ``(g1 + i g2)/sqrt(2)``.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = _as_rng(seed)
    if field == "complex":
        return (rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))) / np.sqrt(2.0)
    if field == "real":
        return rng.standard_normal((n, d))
    raise ValidationError(f"unknown field {field!r}")


def sinr_variance(sinr_db):
    """Target variance for a given SiNR in dB (``-inf`` gives 0)."""
    return 0.0 if np.isneginf(sinr_db) else 10.0 ** (sinr_db / 10.0)


def inject_target(x, s, sinr_db, seed=0):
    """Add ``a s`` to each row of `x`, ``a`` circular Gaussian of variance ``10^(sinr/10)``."""
    x = np.asarray(x)
    s = np.asarray(s, dtype=complex)
    if abs(np.linalg.norm(s) - 1.0) > 1e-9:
        raise ValidationError("steering vector must have unit norm")
    rng = _as_rng(seed)
    rows = x.reshape(-1, x.shape[-1])
    a = (rng.standard_normal(rows.shape[0]) + 1j * rng.standard_normal(rows.shape[0])) / np.sqrt(2.0)
    out = rows + np.sqrt(sinr_variance(sinr_db)) * a[:, None] * s[None, :]
    return out.reshape(x.shape)


def contaminate(batch, rate, scale, seed=0):
    """Replace ``floor(rate N)`` random rows by `scale` times fresh noise.

    Returns the new batch and the sorted list of replaced row indices.
    """
    batch = np.array(batch, copy=True)
    if not 0.0 <= rate < 1.0:
        raise ValidationError("rate must lie in [0, 1)")
    if not scale > 1.0:
        raise ValidationError("scale must exceed 1")
    n, d = batch.shape
    k = int(math.floor(round(rate * n, 9)))
    if k == 0:
        return batch, []
    rng = _as_rng(seed)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    field = "complex" if np.iscomplexobj(batch) else "real"
    batch[idx] = scale * gen_noise(d, k, field, rng)
    return batch, idx.tolist()


# --------------------------------------------------------------------------
# detectors
# --------------------------------------------------------------------------


def _whitened_parts(x, s, Sigma):
    x = np.atleast_2d(x)
    Sinv = np.linalg.inv(Sigma)
    Sinv = (Sinv + Sinv.conj().T) / 2
    w = Sinv @ s
    sws = np.vdot(s, w).real
    num = np.abs(x @ w.conj()) ** 2
    return x, Sinv, sws, num


def mf_stat(x, s, Sigma):
    """Matched filter ``|s^H Sigma^-1 x|^2 / (s^H Sigma^-1 s)`` for each row of `x`."""
    single = np.ndim(x) == 1
    _, _, sws, num = _whitened_parts(x, np.asarray(s, dtype=complex), Sigma)
    out = num / sws
    return float(out[0]) if single else out


def nmf_stat(x, s, R):
    """Normalized matched filter ``|s^H R^-1 x|^2 / ((s^H R^-1 s)(x^H R^-1 x))``."""
    single = np.ndim(x) == 1
    x2, Rinv, sws, num = _whitened_parts(x, np.asarray(s, dtype=complex), R)
    q = kernels.quad_forms(x2, Rinv)
    if np.any(q <= 0):
        raise ValidationError("test cell must be non-zero")
    out = num / (sws * q)
    return float(out[0]) if single else out


def detector_stat(kind, x, s, Sigma):
    if kind == "MF":
        return mf_stat(x, s, Sigma)
    if kind == "NMF":
        return nmf_stat(x, s, Sigma)
    raise ValidationError(f"unknown detector {kind!r}")


# --------------------------------------------------------------------------
# sequential learning
# --------------------------------------------------------------------------


def initial_state(scenario):
    eye = np.eye(scenario.d, dtype=complex)
    return eye / scenario.d if scenario.estimator in TYLER_TYPE else eye


def sequential_stream(scenario, m_steps, seed=None, contaminated=True):
    """Run the sequential estimator for `m_steps` batches and return every state.

    The returned list has ``m_steps`` entries, ``states[m-1] = Sigma_m``.
    """
    if m_steps < 1:
        raise ValidationError("m_steps must be at least 1")
    seed = scenario.master_seed if seed is None else seed
    method = ESTIMATORS[scenario.estimator]
    cfg = scenario.estimator_config
    state = initial_state(scenario)
    states = []
    for m in range(1, m_steps + 1):
        X = gen_noise(scenario.d, scenario.n_train, "complex", derive_rng(seed, _TRAIN, m))
        if contaminated and scenario.contamination is not None:
            rate, scale = scenario.contamination
            X, _ = contaminate(X, rate, scale, derive_rng(seed, _CONTAM, m))
        try:
            state = estimate(method, state, X, cfg).matrix
        except (EstimatorError, ValidationError, np.linalg.LinAlgError) as exc:
            raise EstimatorError(f"sequential step {m}: {exc}", iteration=m) from exc
        states.append(state)
    return states


def stationary_states(scenario, seed, contaminated=True):
    """States after the burn-in, used as draws from the stationary law."""
    states = sequential_stream(scenario, scenario.burn_in + scenario.n_states, seed, contaminated)
    return states[scenario.burn_in:]


def _split(trials, n_states):
    base, extra = divmod(trials, n_states)
    return [base + (1 if j < extra else 0) for j in range(n_states)]


def _statistics(scenario, states, seed, tag, trials, sinr_grid):
    """Detector statistics, one row per SiNR, for `trials` cells spread over `states`.

    Noise and target amplitudes of a cell do not depend on the SiNR, so the
    rows of the result are coupled (common random numbers across SiNR).
    """
    s = scenario.steering_vector
    kind = scenario.detector_kind
    counts = _split(trials, len(states))
    blocks = []
    for j, (state, c) in enumerate(zip(states, counts)):
        if c == 0:
            continue
        rng = derive_rng(seed, tag, _CELLS, j)
        noise = gen_noise(scenario.d, c, "complex", rng)
        amp = (rng.standard_normal(c) + 1j * rng.standard_normal(c)) / np.sqrt(2.0)
        rows = []
        for sinr in sinr_grid:
            x = noise + np.sqrt(sinr_variance(sinr)) * amp[:, None] * s[None, :]
            rows.append(detector_stat(kind, x, s, state))
        blocks.append(np.array(rows))
    return np.concatenate(blocks, axis=1)


def calibrate_threshold(scenario, trials=None, seed=None, states=None):
    """Threshold giving the scenario's false-alarm rate on noise-only cells.

    The estimator states come from a clean training stream (or `states` if
    given). Returns the empirical ``(1 - pfa)`` quantile of the statistic,
    linearly interpolated between order statistics.
    """
    trials = scenario.n_trials_pfa if trials is None else int(trials)
    if trials < 10.0 / scenario.pfa:
        raise ValidationError(f"{trials} trials are too few for pfa={scenario.pfa}; need >= {10 / scenario.pfa:g}")
    seed = scenario.master_seed if seed is None else seed
    if states is None:
        states = stationary_states(scenario, derive_seed(seed, _CALIBRATE), contaminated=False)
    stats = _statistics(scenario, states, seed, _CALIBRATE, trials, [-math.inf])[0]
    return float(np.quantile(stats, 1.0 - scenario.pfa, method="linear"))


def empirical_pfa(scenario, threshold, trials=None, seed=None, states=None):
    """False-alarm rate of `threshold` on fresh clean-trained noise-only trials."""
    trials = scenario.n_trials_pfa if trials is None else int(trials)
    seed = scenario.master_seed if seed is None else seed
    if states is None:
        states = stationary_states(scenario, derive_seed(seed, _RETEST), contaminated=False)
    stats = _statistics(scenario, states, seed, _RETEST, trials, [-math.inf])[0]
    return float(np.mean(stats > threshold))


def derive_seed(seed, tag):
    """A child integer seed for a derived stream."""
    return int(np.random.SeedSequence([int(seed), int(tag)]).generate_state(1, np.uint64)[0])


def detection_curve(scenario, threshold, states=None, seed=None):
    """Detection probability at every grid SiNR.

    Deterministic in ``seed``, which defaults to the scenario's
    ``master_seed``. Cells are shared across SiNR points, so the curve is
    a coupled estimate.
    """
    if threshold is None or not threshold > 0:
        raise ValidationError("a positive calibrated threshold is required")
    seed = scenario.master_seed if seed is None else seed
    if states is None:
        states = stationary_states(scenario, derive_seed(seed, _DETECT), contaminated=True)
    trials = scenario.n_trials_pd
    stats = _statistics(scenario, states, seed, _DETECT, trials, scenario.sinr_grid_db)
    points = [
        CurvePoint(sinr, float(np.mean(row > threshold)), trials, float(threshold))
        for sinr, row in zip(scenario.sinr_grid_db, stats)
    ]
    return DetectionCurve(points, scenario.digest(), seed)


__all__ = [
    "Scenario",
    "CurvePoint",
    "DetectionCurve",
    "derive_rng",
    "gen_noise",
    "inject_target",
    "contaminate",
    "mf_stat",
    "nmf_stat",
    "sequential_stream",
    "stationary_states",
    "calibrate_threshold",
    "empirical_pfa",
    "detection_curve",
]
