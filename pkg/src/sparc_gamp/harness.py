"""Experiment orchestration: iteration traces, rate sweeps, threshold search,
potential scans, and their CSV output.

Every trial draws its message, matrix and channel noise from its own
``SeedSequence(seed, spawn_key=(point, trial))`` stream, so results do not
depend on execution order or on the number of worker processes.
"""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, core, gamp
from .channels import AWGN, BSC, Z, ChannelModel, transmit
from .potential import default_grid, potential_curve, scan_local_maxima
from .state_evolution import MC_SAMPLES, SeConfig, se_trace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("trial", "iter", "mse_dec", "ser_dec", "mse_se", "ser_se")
SWEEP_COLUMNS = ("B", "R", "channel", "epsilon", "trials", "mean_ser_dec",
                 "frac_trials_ser0", "ser_se_fixed_point")
POTENTIAL_COLUMNS = ("E", "phi")
RU_COLUMNS = ("step", "R_min", "R_max", "R_probe", "successes", "trials_run", "decision")
RU_INF_COLUMNS = ("channel", "epsilon", "ru_inf")


class BracketViolation(ValueError):
    """The initial bracket of the threshold search does not straddle the threshold."""

    def __init__(self, message, R, successes, trials_run):
        super().__init__(message)
        self.R = R
        self.successes = successes
        self.trials_run = trials_run


class MemoryBudgetExceeded(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str = "trace"
    B: int = 2
    L: Optional[int] = None
    R: Optional[float] = None
    rates: Sequence[float] = ()
    channel: str = BSC
    epsilon: Optional[float] = 0.1
    snr: Optional[float] = 15.0
    trials: int = 10
    max_iters: int = 200
    tol: float = 1e-8
    damping: float = 1.0
    mc_samples: int = MC_SAMPLES
    E0: float = 1.0
    seed: int = 0
    workers: int = 1
    memory_budget_gb: float = 4.0
    # threshold search
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    threshold: float = 0.01
    # potential scan
    grid_points: int = 200
    e_min: float = 1e-4
    e_max: float = 1.0
    window: int = 1
    literal_z1: bool = False

    def __post_init__(self):
        if self.L is None:
            self.L = 4000 if self.channel == AWGN else 1000
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.rates = tuple(float(r) for r in self.rates)

    @property
    def channel_model(self):
        return ChannelModel.from_name(self.channel, epsilon=self.epsilon, snr=self.snr)

    def params(self, R=None):
        R = self.R if R is None else R
        if R is None:
            raise ValueError("a rate R is required")
        return core.make_params(self.B, self.L, R, self.channel_model)

    def check_memory(self, params):
        """Reject runs whose concurrently held matrices exceed the budget."""
        size = params.M * params.N
        per_trial = size * 8
        if per_trial <= gamp.SQUARE_CACHE_BYTES:
            per_trial *= 2
        elif size * 4 <= gamp.SQUARE_CACHE_BYTES:
            per_trial += size * 4
        need = per_trial * min(self.workers, self.trials)
        if need > self.memory_budget_gb * 2**30:
            raise MemoryBudgetExceeded(
                f"M={params.M}, N={params.N} with {self.workers} worker(s) needs "
                f"{need / 2**30:.2f} GiB, over the {self.memory_budget_gb} GiB budget")

    def metadata(self):
        d = asdict(self)
        d["rates"] = ",".join(_fmt(r) for r in self.rates)
        # worker count does not influence results, keep it out of the echo
        d.pop("workers")
        return d


def trial_rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass
class TrialResult:
    key: tuple
    ser: List[float] = field(default_factory=list)
    mse: List[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    error: Optional[str] = None

    @property
    def final_ser(self):
        return self.ser[-1] if self.ser else math.nan

    @property
    def success(self):
        return self.error is None and self.final_ser == 0.0


def run_trial(params, seed, key, max_iters=200, tol=1e-8, damping=1.0):
    """Sample (x, A, y), decode, and return the SER/MSE paths."""
    rng = trial_rng(seed, *key)
    x = core.sample_message(params, rng)
    A = core.sample_design_matrix(params, rng)
    y = transmit(params.channel, core.encode(A, x), rng)
    try:
        report = gamp.decode(A, y, params, max_iters=max_iters, stop_tol=tol, x_true=x,
                             damping=damping)
    except gamp.NumericalError as exc:
        logger.warning("trial %s: %s", key, exc)
        return TrialResult(key=key, error=str(exc))
    return TrialResult(key=key, ser=report.ser, mse=report.mse, n_iter=report.n_iter,
                       converged=report.converged)


def _run_trial_job(job):
    return run_trial(*job)


def run_trials(jobs, workers=1):
    """Run trial jobs in order; with several workers in a process pool."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [_run_trial_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trial_job, jobs))


def se_for(config, params):
    return se_trace(SeConfig(B=params.B, R=params.R, channel=params.channel,
                             mc_samples=config.mc_samples, E0=config.E0,
                             max_iters=max(config.max_iters, 1), seed=config.seed))


# --- experiments ---------------------------------------------------------------

@dataclass
class TraceResult:
    rows: List[tuple]
    trials: List[TrialResult]
    se: object

    @property
    def failures(self):
        return [t for t in self.trials if t.error is not None]


def _carry(path, t):
    return path[min(t, len(path) - 1)]


def run_iteration_trace(config):
    """Decoder SER/MSE per iteration for each trial, next to the SE prediction.

    Decoder values after convergence and SE values after its fixed point are
    carried forward, so every trial gets rows 0..horizon.
    """
    params = config.params()
    config.check_memory(params)
    se = se_for(config, params)
    jobs = [(params, config.seed, (0, k), config.max_iters, config.tol, config.damping)
            for k in range(config.trials)]
    trials = run_trials(jobs, config.workers)
    ok = [t for t in trials if t.error is None]
    horizon = max([t.n_iter for t in ok] + [len(se) - 1])
    horizon = min(horizon, config.max_iters)
    rows = []
    for k, tr in enumerate(trials):
        if tr.error is not None:
            continue
        for it in range(horizon + 1):
            mse_se, ser_se = se.at(it)
            rows.append((k, it, _carry(tr.mse, it), _carry(tr.ser, it), mse_se, ser_se))
    return TraceResult(rows=rows, trials=trials, se=se)


@dataclass
class SweepPoint:
    B: int
    R: float
    trials: List[TrialResult]
    ser_se: float

    @property
    def mean_ser(self):
        vals = [t.final_ser for t in self.trials if t.error is None]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def frac_ser0(self):
        return float(np.mean([t.success for t in self.trials]))


def run_rate_sweep(config, rates=None):
    rates = config.rates if rates is None else tuple(rates)
    points = []
    for i, R in enumerate(rates):
        params = config.params(R)
        config.check_memory(params)
        jobs = [(params, config.seed, (i, k), config.max_iters, config.tol, config.damping)
                for k in range(config.trials)]
        trials = run_trials(jobs, config.workers)
        se = se_for(config, params)
        points.append(SweepPoint(B=params.B, R=params.R, trials=trials, ser_se=se.fixed_point[1]))
    rows = [(p.B, p.R, config.channel, config.channel_model.parameter, config.trials,
             p.mean_ser, p.frac_ser0, p.ser_se) for p in points]
    return rows, points


@dataclass
class Probe:
    R: float
    successes: int
    trials_run: int
    passed: bool


@dataclass
class RuResult:
    B: int
    channel: str
    epsilon: Optional[float]
    R_u: float
    brackets: List[tuple]
    probes: List[Probe]
    trials: int
    threshold: float


def probe_rate(config, R, trials=None):
    """Decode ``trials`` fresh instances at rate ``R``; succeed on a strict SER=0 majority.

    Trials run in chunks of ``config.workers`` and stop as soon as the
    majority is decided. The outcome is independent of the chunk size.
    """
    trials = config.trials if trials is None else trials
    params = config.params(R)
    config.check_memory(params)
    need = trials // 2 + 1
    successes = failures = run = 0
    chunk = max(config.workers, 1)
    while successes < need and failures < trials - need + 1:
        todo = min(chunk, trials - run)
        jobs = [(params, config.seed, (k,), config.max_iters, config.tol, config.damping)
                for k in range(run, run + todo)]
        for res in run_trials(jobs, config.workers):
            if successes >= need or failures >= trials - need + 1:
                break
            run += 1
            if res.success:
                successes += 1
            else:
                failures += 1
    passed = successes >= need
    logger.info("probe R=%.6g: %d/%d successes -> %s", R, successes, run,
                "pass" if passed else "fail")
    return Probe(R=R, successes=successes, trials_run=run, passed=passed)


def find_ru(config, r_min=None, r_max=None, threshold=None, trials=None, check_bracket=True):
    """Bisection for the largest rate the decoder still recovers.

    A probe at the midpoint moves ``r_min`` up when more than half of the
    trials end with SER=0, otherwise moves ``r_max`` down; the search stops
    once the bracket is narrower than ``threshold`` and returns its midpoint.
    """
    r_min = config.r_min if r_min is None else r_min
    r_max = config.r_max if r_max is None else r_max
    threshold = config.threshold if threshold is None else threshold
    trials = config.trials if trials is None else trials
    if r_min is None or r_max is None or not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if trials % 2 == 0:
        raise ValueError("use an odd number of trials so the majority is well defined")
    probes = []
    if check_bracket:
        lo = probe_rate(config, r_min, trials)
        probes.append(lo)
        if not lo.passed:
            raise BracketViolation(f"decoder already fails at r_min={r_min}", r_min,
                                   lo.successes, lo.trials_run)
        hi = probe_rate(config, r_max, trials)
        probes.append(hi)
        if hi.passed:
            raise BracketViolation(f"decoder still succeeds at r_max={r_max}", r_max,
                                   hi.successes, hi.trials_run)
    brackets = [(r_min, r_max)]
    while r_max - r_min >= threshold:
        R = 0.5 * (r_min + r_max)
        probe = probe_rate(config, R, trials)
        probes.append(probe)
        if probe.passed:
            r_min = R
        else:
            r_max = R
        brackets.append((r_min, r_max))
    return RuResult(B=config.B, channel=config.channel,
                    epsilon=config.channel_model.parameter if config.channel != AWGN else None,
                    R_u=0.5 * (r_min + r_max), brackets=brackets, probes=probes,
                    trials=trials, threshold=threshold)


def ru_rows(result):
    rows = []
    offset = len(result.probes) - (len(result.brackets) - 1)
    for step in range(1, len(result.brackets)):
        probe = result.probes[offset + step - 1]
        lo, hi = result.brackets[step]
        rows.append((step, lo, hi, probe.R, probe.successes, probe.trials_run,
                     "pass" if probe.passed else "fail"))
    return rows


def ru_infinity(kind, epsilon):
    """Large-B limit of the decoder threshold for the binary channels."""
    kind = kind.lower()
    c = math.pi * math.log(2.0)
    if kind == BSC:
        ChannelModel.bsc(epsilon)
        return (1.0 - 2.0 * epsilon) ** 2 / c
    if kind == Z:
        ChannelModel.z(epsilon)
        return (1.0 - epsilon) / (c * (1.0 + epsilon))
    raise ValueError(f"no closed-form large-B threshold for channel {kind!r}")


def run_potential_scan(config):
    if config.channel != AWGN:
        raise ValueError("the potential function is only defined for the AWGN channel")
    if config.R is None:
        raise ValueError("a rate R is required")
    grid = default_grid(config.grid_points, config.e_min, config.e_max)
    curve = potential_curve(config.B, config.R, config.snr, grid=grid,
                            mc_samples=config.mc_samples, seed=config.seed,
                            literal_z1=config.literal_z1)
    maxima = scan_local_maxima(curve, config.window)
    rows = list(zip(curve.grid.tolist(), curve.phi.tolist()))
    return rows, maxima, curve


# --- CSV -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def write_csv(stream, columns, rows, command, config=None, notes=()):
    """CSV with ``#`` metadata lines, LF endings and 17 significant digits."""
    stream.write(f"# sparc-gamp {__version__}\n")
    stream.write(f"# command={command}\n")
    if config is not None:
        for key, value in config.metadata().items():
            stream.write(f"# {key}={_fmt(value)}\n")
    for note in notes:
        stream.write(f"# {note}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def to_csv_string(columns, rows, command, config=None, notes=()):
    buf = io.StringIO()
    write_csv(buf, columns, rows, command, config, notes)
    return buf.getvalue()
