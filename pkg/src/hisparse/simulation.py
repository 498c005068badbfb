"""Grouped random access: traffic generation, detectors, Monte Carlo sweeps.

Users are split into N groups; each user picks one of n resources in its
group and all groups' pilot contributions are mixed over M slots through a
random Gaussian modulation, with every group measured by its own subsampled
DFT. The harness recovers the per-group resource occupancies with hihtp and
counts how many users were detected, against an ungrouped single-pool
baseline (exactly invertible measurement, so only collisions cost users).

A user counts as detected only when it is the unique chooser of its
(group, resource) pair AND that pair shows up in the recovered support;
collided users are unservable no matter what the solver returns.
"""

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import BlockVector, SparsityPattern
from .operators import HierarchicalOperator, make_gaussian_mixing, make_subsampled_dft
from .solver import SolverConfig, SolverDivergence, hihtp

__all__ = [
    "AccessConfig",
    "SweepConfig",
    "TrialRecord",
    "TRIAL_CSV_COLUMNS",
    "draw_user_choices",
    "build_signal",
    "baseline_detect",
    "analytic_baseline",
    "grouped_detect",
    "run_sweep",
    "write_trials_csv",
]

ASSIGNMENTS = ("fixedPerGroup", "uniformRandomGroups")

TRIAL_CSV_COLUMNS = (
    "grid_id,N,n,sigma,M,m,assignment,trial,seed,total_users,collided,"
    "detected,baseline_detected,analytic_baseline,iterations"
)


@dataclass(frozen=True)
class AccessConfig:
    """One grid cell of the random access experiment.

    mixing_variance None means 1/sqrt(N), the modulation variance used for
    the grouped measurement in experiment mode. Because that scaling moves
    the operator away from unit column energy, stepsize here accepts
    "scaled" (the default: constant 1.5 / (M * mixing_variance), i.e. unit
    energy restored plus a mild overstep that helps hard thresholding escape
    fixed points) besides the solver's own "adaptive" and plain constants.
    snr_db None means noiseless.
    """

    n: int = 512
    m: int = 256
    M: int = 16
    N: int = 8
    sigma: int = 16
    trials: int = 25
    assignment: str = "fixedPerGroup"
    seed: int = 0
    mixing_variance: float = None
    snr_db: float = None
    stepsize: object = "scaled"
    tolerance: float = 1e-6
    max_iterations: int = 100

    def __post_init__(self):
        if self.m > self.n:
            raise ValueError(f"m={self.m} must not exceed n={self.n}")
        if self.sigma > self.n:
            raise ValueError(f"sigma={self.sigma} must not exceed n={self.n}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.assignment not in ASSIGNMENTS:
            raise ValueError(
                f"assignment must be one of {ASSIGNMENTS}, got {self.assignment!r}"
            )


@dataclass(frozen=True)
class SweepConfig:
    """Cartesian grid over group counts and per-group loads."""

    n: int = 512
    m: int = 256
    M: int = 16
    N_values: tuple = (8, 16, 24, 32)
    sigma_values: tuple = (16, 24, 32, 36)
    trials: int = 25
    assignment: str = "fixedPerGroup"
    seed: int = 0
    mixing_variance: float = None
    snr_db: float = None
    stepsize: object = "scaled"
    tolerance: float = 1e-6
    max_iterations: int = 100

    def grid(self):
        """(grid_id, AccessConfig) cells, row-major over (N, sigma)."""
        cells = []
        gid = 0
        for N in self.N_values:
            for sigma in self.sigma_values:
                cells.append((gid, AccessConfig(
                    n=self.n, m=self.m, M=self.M, N=N, sigma=sigma,
                    trials=self.trials, assignment=self.assignment,
                    seed=self.seed, mixing_variance=self.mixing_variance,
                    snr_db=self.snr_db, stepsize=self.stepsize,
                    tolerance=self.tolerance,
                    max_iterations=self.max_iterations)))
                gid += 1
        return cells


@dataclass(frozen=True)
class TrialRecord:
    grid_id: int
    N: int
    n: int
    sigma: int
    M: int
    m: int
    assignment: str
    trial: int
    seed: int
    total_users: int
    collided: int
    detected: int
    baseline_detected: int
    analytic_baseline: float
    iterations: int

    def __post_init__(self):
        if not 0 <= self.detected <= self.total_users - self.collided:
            raise ValueError(
                f"detected={self.detected} outside [0, total-collided="
                f"{self.total_users - self.collided}]"
            )

    def csv_row(self):
        return (
            f"{self.grid_id},{self.N},{self.n},{self.sigma},{self.M},{self.m},"
            f"{self.assignment},{self.trial},{self.seed},{self.total_users},"
            f"{self.collided},{self.detected},{self.baseline_detected},"
            f"{self.analytic_baseline!r},{self.iterations}"
        )


def draw_user_choices(cfg, rng):
    """Resource picks per group.

    fixedPerGroup: exactly sigma users in every group. uniformRandomGroups:
    sigma*N users thrown into uniform groups first (group loads then vary,
    while the detector still runs with the fixed per-group budget).
    """
    if cfg.assignment == "fixedPerGroup":
        return [rng.integers(0, cfg.n, size=cfg.sigma) for _ in range(cfg.N)]
    total = cfg.sigma * cfg.N
    groups = rng.integers(0, cfg.N, size=total)
    resources = rng.integers(0, cfg.n, size=total)
    return [resources[groups == i] for i in range(cfg.N)]


def build_signal(choices, n):
    """Per-group occupancy counts as a block vector (superposed unit pilots)."""
    return BlockVector([
        np.bincount(np.asarray(ch, dtype=int), minlength=n).astype(np.float64)
        for ch in choices
    ])


def _singleton_mask(choices, n):
    counts = np.bincount(np.asarray(choices, dtype=int), minlength=n)
    return counts == 1


def baseline_detect(choices, n, rng=None):
    """Detected users when everyone shares one pool of n resources.

    The full measurement is exactly invertible, so the occupancy vector is
    known perfectly and exactly the non-collided (singleton) users are
    served. `choices` is either the per-group pick lists (flattened into the
    shared pool) or an integer user count, in which case `rng` draws the
    picks.
    """
    if isinstance(choices, (int, np.integer)):
        if choices == 0:
            return 0
        if rng is None:
            raise ValueError("an rng is needed to draw choices from a user count")
        flat = rng.integers(0, n, size=int(choices))
    else:
        arrays = [np.asarray(c, dtype=int) for c in choices]
        flat = np.concatenate(arrays) if arrays else np.empty(0, dtype=int)
        if flat.size == 0:
            return 0
    return int(_singleton_mask(flat, n).sum())


def analytic_baseline(k, n):
    """Expected non-collided users among k uniform choosers of n resources.

    Each user is alone on its resource with probability (1 - 1/n)^(k-1).
    """
    if k < 0 or n < 1:
        raise ValueError("need k >= 0 and n >= 1")
    if k == 0:
        return 0.0
    return float(k) * (1.0 - 1.0 / n) ** (k - 1)


def grouped_detect(cfg, choices, rng):
    """Run one grouped-measurement trial and score detections.

    Draws a fresh mixing matrix and N independent subsampled-DFT block
    operators, measures the occupancy signal, recovers with hihtp using the
    (s=N, sigma per block) budget, and counts unique choosers whose
    (group, resource) pair appears in the recovered support.
    """
    variance = cfg.mixing_variance
    if variance is None:
        variance = 1.0 / np.sqrt(cfg.N)
    stepsize = cfg.stepsize
    if stepsize == "scaled":
        stepsize = 1.5 / (cfg.M * variance)
    A = make_gaussian_mixing(cfg.M, cfg.N, variance, rng, field="complex")
    blocks = tuple(make_subsampled_dft(cfg.m, cfg.n, rng) for _ in range(cfg.N))
    H = HierarchicalOperator(A, blocks)

    x = build_signal(choices, cfg.n)
    y = H.apply(x)
    if cfg.snr_db is not None:
        power = float(np.mean(np.abs(y) ** 2))
        nvar = power * 10.0 ** (-cfg.snr_db / 10.0)
        y = y + np.sqrt(nvar / 2.0) * (
            rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)
        )

    pattern = SparsityPattern.uniform(cfg.N, cfg.n, s=cfg.N, sigma=cfg.sigma)
    solver_cfg = SolverConfig(
        pattern=pattern, stepsize=stepsize, tolerance=cfg.tolerance,
        max_iterations=cfg.max_iterations, lsq_method="gram",
    )
    result = hihtp(H, y, solver_cfg)
    recovered = set(result.support)

    total = sum(len(c) for c in choices)
    detected = 0
    singles = 0
    for i, ch in enumerate(choices):
        mask = _singleton_mask(ch, cfg.n)
        singles += int(mask.sum())
        detected += sum(1 for r in np.flatnonzero(mask) if (i, int(r)) in recovered)

    return TrialRecord(
        grid_id=0, N=cfg.N, n=cfg.n, sigma=cfg.sigma, M=cfg.M, m=cfg.m,
        assignment=cfg.assignment, trial=0, seed=cfg.seed,
        total_users=total, collided=total - singles, detected=detected,
        baseline_detected=baseline_detect(choices, cfg.n),
        analytic_baseline=analytic_baseline(total, cfg.n),
        iterations=result.iterations,
    )


def _trial_seed_and_rng(master_seed, grid_id, trial):
    ss = np.random.SeedSequence((master_seed, grid_id, trial))
    return int(ss.generate_state(1)[0]), np.random.default_rng(ss)


def _run_trial(args):
    sweep, grid_id, cfg, trial = args
    seed, rng = _trial_seed_and_rng(sweep.seed, grid_id, trial)
    choices = draw_user_choices(cfg, rng)
    try:
        rec = grouped_detect(cfg, choices, rng)
    except SolverDivergence as exc:
        return ("failure", grid_id, trial, str(exc))
    rec = dataclasses.replace(rec, grid_id=grid_id, trial=trial, seed=seed)
    return ("record", rec)


def run_sweep(sweep, jobs=1):
    """All trials of the grid; returns (records, failures).

    Every trial owns the rng stream seeded by (master seed, grid_id, trial),
    so results are reproducible regardless of worker count or ordering.
    Diverged trials are excluded from records and reported in failures.
    """
    tasks = []
    for grid_id, cfg in sweep.grid():
        if cfg.N > 8:
            # the regime this harness exists for: more unknowns than measurements
            assert cfg.M * cfg.m < cfg.N * cfg.n, (
                f"cell N={cfg.N} is not underdetermined: "
                f"{cfg.M * cfg.m} >= {cfg.N * cfg.n}"
            )
        for trial in range(sweep.trials):
            tasks.append((sweep, grid_id, cfg, trial))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_trial, tasks, chunksize=1))
    else:
        outcomes = [_run_trial(t) for t in tasks]

    records, failures = [], []
    for out in outcomes:
        if out[0] == "record":
            records.append(out[1])
        else:
            failures.append(out[1:])
    records.sort(key=lambda r: (r.grid_id, r.trial))
    return records, failures


def write_trials_csv(path, records, resolved_config, failures=()):
    """One row per trial, preceded by a replayable config echo comment."""
    lines = [f"# config: {json.dumps(resolved_config, sort_keys=True)}"]
    if failures:
        lines.append(f"# failures: {len(failures)}")
    lines.append(TRIAL_CSV_COLUMNS)
    lines.extend(r.csv_row() for r in records)
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
