"""Replicated runs and ensemble statistics.

Replication ``i`` uses seed ``base_seed + i``.  Statistics are accumulated
with Welford's update in replication order, so the first ``k`` replications
of a larger batch give exactly the statistics of a batch of size ``k``.
The standard deviation is the population one (divide by ``n``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import SERIES, TimeSeriesFrame, run
from .scenario import ScenarioConfig


@dataclass
class EnsembleStats:
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray
    replications: int
    base_seed: int
    columns: tuple = SERIES
    frames: list = field(default_factory=list)

    def series(self, name: str, stat: str = "mean") -> np.ndarray:
        return getattr(self, stat)[:, self.columns.index(name)]

    @property
    def ticks(self) -> np.ndarray:
        return np.arange(1, self.mean.shape[0] + 1)


class Accumulator:
    """Running per-cell mean, M2, min and max over frames of equal shape.

    NaN cells (series for an absent buyer kind) stay NaN.
    """

    def __init__(self):
        self.n = 0
        self.mean = self.m2 = self.lo = self.hi = None

    def add(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if self.n == 0:
            self.mean = np.zeros_like(x)
            self.m2 = np.zeros_like(x)
            self.lo = x.copy()
            self.hi = x.copy()
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)
        self.lo = np.fmin(self.lo, x) if self.n > 1 else self.lo
        self.hi = np.fmax(self.hi, x) if self.n > 1 else self.hi

    def result(self, base_seed: int, frames=()) -> EnsembleStats:
        if self.n == 0:
            raise ValueError("no replications accumulated")
        return EnsembleStats(
            mean=self.mean.copy(),
            std=np.sqrt(self.m2 / self.n),
            min=self.lo.copy(),
            max=self.hi.copy(),
            replications=self.n,
            base_seed=base_seed,
            frames=list(frames),
        )


class RunFailed(RuntimeError):
    """A replication raised; ``index`` and ``seed`` identify it."""

    def __init__(self, index: int, seed: int, cause: BaseException):
        super().__init__(f"replication {index} (seed {seed}) failed: {cause!r}")
        self.index = index
        self.seed = seed


def _run_one(args):
    config, seed = args
    return run(config, seed).data


def run_batch(
    config: ScenarioConfig,
    n: int | None = None,
    base_seed: int | None = None,
    keep_frames: bool = False,
    workers: int = 1,
    progress=None,
) -> EnsembleStats:
    """Run ``n`` replications (default ``config.replications``) and aggregate.

    With ``workers > 1`` replications run in a process pool; results are
    still folded in replication order, so the statistics do not depend on
    the worker count.
    """
    n = config.replications if n is None else n
    base_seed = config.base_seed if base_seed is None else base_seed
    if n < 1:
        raise ValueError("need at least one replication")
    config.validate()
    seeds = [base_seed + i for i in range(n)]
    acc = Accumulator()
    frames: list[TimeSeriesFrame] = []

    def fold(i, data):
        acc.add(data)
        if keep_frames:
            frames.append(TimeSeriesFrame(data))
        if progress is not None:
            progress(i + 1, n)

    if workers <= 1:
        for i, seed in enumerate(seeds):
            try:
                data = run(config, seed).data
            except Exception as e:
                raise RunFailed(i, seed, e) from e
            fold(i, data)
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_run_one, [(config, s) for s in seeds], chunksize=max(1, n // (4 * workers)))
            i = 0
            try:
                for i, data in enumerate(results):
                    fold(i, data)
            except Exception as e:
                raise RunFailed(i, seeds[i], e) from e
    return acc.result(base_seed, frames)


def convergence_report(
    stats: EnsembleStats,
    window: int = 200,
    eps_slope: float = 1e-4,
    eps_std: float = 0.01,
    scale: dict | None = None,
) -> dict:
    """Per-series plateau check over the last ``window`` ticks of the mean.

    A series has converged when the least-squares slope of its mean is
    below ``eps_slope`` per tick and its standard deviation over the window
    is below ``eps_std`` (both after dividing by ``scale[name]``, default 1).
    """
    if not 1 < window <= stats.mean.shape[0]:
        raise ValueError(f"window {window} must be in (1, {stats.mean.shape[0]}]")
    scale = scale or {}
    tail = stats.mean[-window:]
    t = np.arange(tail.shape[0], dtype=float)
    out = {}
    for j, name in enumerate(stats.columns):
        y = tail[:, j] / scale.get(name, 1.0)
        if np.isnan(y).any():
            continue
        slope = np.polyfit(t, y, 1)[0]
        out[name] = bool(abs(slope) < eps_slope and y.std() < eps_std)
    return out
