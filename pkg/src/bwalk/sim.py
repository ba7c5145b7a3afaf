"""Event-driven Monte Carlo of the branching walk.

With K particles alive the next event comes after an Exp(K (1 + nu)) time;
it is a jump of a uniformly chosen particle with probability 1/(1 + nu) and
a split (duplicate in place) otherwise.  Each replica owns the generator
PCG64(SeedSequence(seed, spawn_key=(replica,))), so results do not depend on
how replicas are scheduled across threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _backend
from .kernel import AngularProfile, JumpKernel, build_kernel

__all__ = ["SimConfig", "PopulationSnapshot", "ReplicaRun", "MomentEstimate",
           "replica_rng", "simulate", "run_replicas", "estimate_moments",
           "total_population", "write_snapshots_csv", "write_moments_csv"]

MIN_REPLICAS = 100
EXCLUSION_LIMIT = 0.01


@dataclass(frozen=True)
class SimConfig:
    """Kernel parameters, dynamics and replica settings for one MC study."""

    d: int
    alpha: float
    nu: float
    t_end: float
    snapshots: tuple
    replicas: int
    seed: int
    profile: tuple = (1.0,)
    R: int = 64
    cap: int = 1_000_000

    def __post_init__(self):
        snaps = tuple(float(s) for s in self.snapshots)
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "profile", tuple(float(v) for v in self.profile))
        if self.nu < 0:
            raise ValueError("branching rate must be non-negative")
        if not snaps:
            raise ValueError("at least one snapshot time is required")
        if list(snaps) != sorted(snaps) or snaps[0] < 0:
            raise ValueError("snapshot times must be sorted and non-negative")
        if snaps[-1] > self.t_end:
            raise ValueError("snapshot times must not exceed t_end")
        if self.replicas < 1:
            raise ValueError("replica count must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if math.exp(min(self.nu * self.t_end, 700.0)) > self.cap / 10:
            raise ValueError(f"expected population e^(nu t_end) exceeds cap/10 = {self.cap / 10:g}")

    @cached_property
    def kernel(self) -> JumpKernel:
        return build_kernel(self.d, self.alpha, AngularProfile(self.d, np.array(self.profile)),
                            self.R)

    def describe(self) -> str:
        return (f"d={self.d} alpha={self.alpha!r} nu={self.nu!r} t_end={self.t_end!r} "
                f"snapshots={list(self.snapshots)} replicas={self.replicas} seed={self.seed} "
                f"R={self.R} cap={self.cap} profile={list(self.profile)}")


@dataclass(frozen=True)
class PopulationSnapshot:
    """Occupancy n(t, x) in sparse form: occupied sites (sorted) and counts."""

    t: float
    sites: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_positions(cls, t, pos):
        sites, counts = np.unique(np.asarray(pos, dtype=np.int64), axis=0, return_counts=True)
        return cls(float(t), sites, counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def count_at(self, x) -> int:
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        hit = np.all(self.sites == x, axis=1)
        return int(self.counts[hit].sum())


@dataclass(frozen=True)
class ReplicaRun:
    replica: int
    snapshots: list
    valid: bool
    events: int


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replica,))))


def simulate(config: SimConfig, replica: int, backend=None) -> ReplicaRun:
    """Run one replica; a run that would exceed the cap is returned invalid."""
    core = _backend.core if backend is None else _backend.get_core(backend)
    rng = replica_rng(config.seed, replica)
    tab = config.kernel.sampler_tables()
    snaps = np.asarray(config.snapshots, dtype=float)
    pos, status, events = core.simulate(tab, rng, float(config.nu), float(config.t_end),
                                        snaps, int(config.cap))
    shots = [PopulationSnapshot.from_positions(t, p) for t, p in zip(config.snapshots, pos)]
    return ReplicaRun(replica, shots, status == 0, int(events))


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("BWALK_THREADS", "0") or 0) or (os.cpu_count() or 1)
    return max(1, int(threads))


def run_replicas(config: SimConfig, threads: int | None = None, backend=None) -> list:
    """All replicas, ordered by index (thread count does not affect results)."""
    config.kernel.sampler_tables()  # build shared tables before fanning out
    n = _threads(threads)
    idx = range(config.replicas)
    if n == 1:
        return [simulate(config, i, backend) for i in idx]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda i: simulate(config, i, backend), idx))


@dataclass(frozen=True)
class MomentEstimate:
    """Sample moments of n(t, x) over valid replicas at one snapshot time.

    Sites never occupied have estimate 0; their standard error is taken as
    1/replicas, the binomial scale for zero hits in that many trials.
    """

    t: float
    sites: np.ndarray
    m1: np.ndarray
    m1_se: np.ndarray
    m2: np.ndarray
    m2_se: np.ndarray
    replicas: int
    excluded: int
    totals: np.ndarray = field(repr=False)

    @property
    def flagged(self) -> bool:
        return self.excluded > EXCLUSION_LIMIT * (self.replicas + self.excluded)

    def at(self, x):
        """(m1, m1_se, m2, m2_se) at lattice point x."""
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        hit = np.nonzero(np.all(self.sites == x, axis=1))[0]
        if hit.size == 0:
            z = 1.0 / self.replicas
            return 0.0, z, 0.0, z
        i = hit[0]
        return float(self.m1[i]), float(self.m1_se[i]), float(self.m2[i]), float(self.m2_se[i])

    def population_moments(self):
        """Mean and SE of N(t) and N(t)^2 across valid replicas."""
        n = self.totals.astype(float)
        r = n.size
        out = {}
        for name, v in (("N", n), ("N2", n * n)):
            out[name] = float(v.mean())
            out[name + "_se"] = float(v.std(ddof=1) / math.sqrt(r)) if r > 1 else float("nan")
        return out

    def lag1_correlation(self) -> float:
        n = self.totals.astype(float)
        if n.size < 3 or n.std() == 0:
            return 0.0
        return float(np.corrcoef(n[:-1], n[1:])[0, 1])


def _moments_at(runs, k, t, d):
    valid = [r for r in runs if r.valid]
    nrep = len(valid)
    sites = [r.snapshots[k].sites for r in valid]
    counts = [r.snapshots[k].counts for r in valid]
    totals = np.array([c.sum() for c in counts], dtype=np.int64)
    all_sites = np.concatenate(sites) if sites else np.empty((0, d), np.int64)
    all_counts = np.concatenate(counts).astype(float) if counts else np.empty(0)
    uniq, inv = np.unique(all_sites, axis=0, return_inverse=True)
    inv = inv.ravel()
    m = len(uniq)
    s1 = np.bincount(inv, all_counts, m)
    s2 = np.bincount(inv, all_counts ** 2, m)
    s4 = np.bincount(inv, all_counts ** 4, m)
    m1 = s1 / nrep
    m2 = s2 / nrep
    # unbiased variances of n and n^2 (zeros included through the sums)
    den = max(nrep - 1, 1)
    v1 = np.maximum(s2 - nrep * m1 * m1, 0.0) / den
    v2 = np.maximum(s4 - nrep * m2 * m2, 0.0) / den
    return MomentEstimate(t, uniq, m1, np.sqrt(v1 / nrep), m2, np.sqrt(v2 / nrep), nrep,
                          len(runs) - nrep, totals)


def estimate_moments(config: SimConfig, runs: list | None = None,
                     threads: int | None = None) -> list:
    """One MomentEstimate per snapshot time; capped replicas are excluded."""
    if config.replicas < MIN_REPLICAS:
        raise ValueError(f"moment estimation needs at least {MIN_REPLICAS} replicas")
    if runs is None:
        runs = run_replicas(config, threads)
    if not any(r.valid for r in runs):
        raise RuntimeError("every replica hit the particle cap")
    return [_moments_at(runs, k, t, config.d) for k, t in enumerate(config.snapshots)]


def total_population(runs: list, k: int) -> np.ndarray:
    """N(t_k) for each valid replica, in replica order."""
    return np.array([r.snapshots[k].total for r in runs if r.valid], dtype=np.int64)


def _header_lines(fh, header):
    for line in (header or "").splitlines():
        fh.write(f"# {line}\n")


def write_snapshots_csv(runs: list, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        _header_lines(fh, header)
        d = None
        for r in runs:
            for s in r.snapshots:
                d = s.sites.shape[1]
                break
            if d:
                break
        cols = ["x"] if d in (None, 1) else ["x1", "x2"]
        fh.write(",".join(["replica", "t"] + cols + ["count"]) + "\n")
        for r in runs:
            for s in r.snapshots:
                for site, c in zip(s.sites, s.counts):
                    xs = ",".join(str(int(v)) for v in site)
                    fh.write(f"{r.replica},{s.t!r},{xs},{int(c)}\n")


def write_moments_csv(estimates: list, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        _header_lines(fh, header)
        d = estimates[0].sites.shape[1] if estimates else 1
        cols = ["x"] if d == 1 else ["x1", "x2"]
        fh.write(",".join(["t"] + cols + ["m1_hat", "m1_se", "m2_hat", "m2_se"]) + "\n")
        for e in estimates:
            for i, site in enumerate(e.sites):
                xs = ",".join(str(int(v)) for v in site)
                vals = (e.m1[i], e.m1_se[i], e.m2[i], e.m2_se[i])
                fh.write(f"{e.t!r},{xs}," + ",".join(repr(float(v)) for v in vals) + "\n")
