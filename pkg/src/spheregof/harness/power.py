"""Monte Carlo power studies: many independent tests per scenario and kernel."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from threadpoolctl import threadpool_limits

from ..exceptions import FitFailed, InvalidConfig
from ..resampling import Method, TestConfig, test_composite_many, test_simple_many
from ..samplers import DistributionSpec, SeedStream, sample, spec_from_dict, spec_to_dict
from ..statistic import KernelSpec, kernel_from_dict, kernel_to_dict
from .scenarios import Scenario

Null = Union[DistributionSpec, str]


@dataclass(frozen=True)
class ExperimentSpec:
    """A simulation design.

    ``null`` is either a fully specified distribution (simple test) or a
    family name, ``"vmf"``, ``"acg"`` or ``"kent"`` (composite test). With
    ``m_values`` set, every scenario is also run at each artificial sample
    size in the list, reusing the same data sample X.
    """

    scenarios: Sequence[Scenario]
    null: Null
    kernels: Sequence[KernelSpec]
    n: int = 50
    m: int = 500
    b: int = 199
    alpha: float = 0.05
    replications: int = 1000
    seed: int = 0
    method: str = "bootstrap"
    m_values: Sequence[int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if self.m_values is not None:
            object.__setattr__(self, "m_values", tuple(int(v) for v in self.m_values))
        if int(self.replications) != self.replications or self.replications < 1:
            raise InvalidConfig(f"replications must be a positive integer, got {self.replications}")
        if not self.scenarios:
            raise InvalidConfig("at least one scenario is required")
        if not self.kernels:
            raise InvalidConfig("at least one kernel is required")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise InvalidConfig("scenario labels must be unique")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidConfig(f"n must be a positive integer, got {self.n}")
        if isinstance(self.null, str) and self.null.lower() not in ("vmf", "acg", "kent"):
            raise InvalidConfig(f"unknown null family {self.null!r}")
        try:
            Method(self.method)
        except ValueError:
            raise InvalidConfig(f"unknown resampling method {self.method!r}") from None
        for sc in self.scenarios:
            d_null = None if isinstance(self.null, str) else self.null.d
            if d_null is not None and sc.spec.d != d_null:
                raise InvalidConfig(f"scenario {sc.label!r} lives in dimension {sc.spec.d}, null in {d_null}")
        for name in ("n", "m", "b", "replications", "seed"):
            object.__setattr__(self, name, int(getattr(self, name)))
        self.config(self.m_list[0])

    @property
    def composite(self) -> bool:
        return isinstance(self.null, str)

    @property
    def m_list(self) -> tuple:
        return self.m_values if self.m_values else (self.m,)

    def config(self, m: int, seed: SeedStream | None = None) -> TestConfig:
        return TestConfig(alpha=self.alpha, m=m, b=self.b, method=self.method,
                          seed=seed or SeedStream(self.seed), kernel=self.kernels[0])

    def to_dict(self) -> dict:
        out = {
            "scenarios": [{"label": s.label, "spec": spec_to_dict(s.spec)} for s in self.scenarios],
            "null": self.null if self.composite else spec_to_dict(self.null),
            "kernels": [kernel_to_dict(k) for k in self.kernels],
            "n": self.n, "m": self.m, "b": self.b, "alpha": self.alpha,
            "replications": self.replications, "seed": self.seed, "method": self.method,
        }
        if self.m_values:
            out["m_values"] = list(self.m_values)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSpec":
        try:
            null = obj["null"]
            null = null if isinstance(null, str) else spec_from_dict(null)
            scenarios = [Scenario(s["label"], spec_from_dict(s["spec"])) for s in obj["scenarios"]]
            kernels = [kernel_from_dict(k) for k in obj["kernels"]]
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"malformed experiment description: missing or invalid {exc}") from exc
        keys = ("n", "m", "b", "alpha", "replications", "seed", "method", "m_values")
        return cls(scenarios, null, kernels, **{k: obj[k] for k in keys if k in obj})


@dataclass(frozen=True)
class PowerRow:
    scenario: str
    kernel: str
    n: int
    m: int
    rejections: int
    replications: int
    failures: int = 0

    @property
    def rate(self) -> float:
        return self.rejections / self.replications if self.replications else float("nan")

    @property
    def se(self) -> float:
        """Binomial Monte Carlo standard error sqrt(p (1 - p) / reps)."""
        p = self.rate
        return math.sqrt(p * (1.0 - p) / self.replications) if self.replications else float("nan")


@dataclass(frozen=True)
class PowerTable:
    rows: tuple = ()
    experiment: dict = field(default_factory=dict, compare=False)

    def lookup(self, scenario: str, kernel: str, m: int | None = None) -> PowerRow:
        for r in self.rows:
            if r.scenario == scenario and r.kernel == kernel and (m is None or r.m == m):
                return r
        raise KeyError((scenario, kernel, m))


def replication_stream(seed: int, replication: int, scenario: int) -> SeedStream:
    """Stream of one (replication, scenario) cell; ``child(0)`` draws X and
    ``child(1 + k)`` seeds the test at the k-th artificial sample size."""
    return SeedStream(seed, replication).child(scenario)


def _run_one(spec: ExperimentSpec, r: int):
    """Reject flags (+1) and failures (-1) for replication ``r``: shape (S, M, K)."""
    out = np.zeros((len(spec.scenarios), len(spec.m_list), len(spec.kernels)), dtype=np.int8)
    for s, sc in enumerate(spec.scenarios):
        base = replication_stream(spec.seed, r, s)
        x = sample(sc.spec, spec.n, base.child(0))
        for k, m in enumerate(spec.m_list):
            cfg = spec.config(m, base.child(1 + k))
            if spec.composite:
                try:
                    res = test_composite_many(x, spec.null, cfg, spec.kernels)
                except FitFailed:
                    out[s, k, :] = -1
                    continue
            else:
                res = test_simple_many(x, spec.null, cfg, spec.kernels)
            out[s, k, :] = [int(t.reject) for t in res]
    return out


def _run_chunk(spec: ExperimentSpec, start: int, stop: int) -> np.ndarray:
    # Single-threaded BLAS keeps results independent of the worker count.
    with threadpool_limits(limits=1):
        return np.stack([_run_one(spec, r) for r in range(start, stop)])


def _tabulate(spec: ExperimentSpec, flags: np.ndarray) -> PowerTable:
    rows = []
    for s, sc in enumerate(spec.scenarios):
        for k, m in enumerate(spec.m_list):
            for j, kern in enumerate(spec.kernels):
                col = flags[:, s, k, j]
                fails = int(np.count_nonzero(col < 0))
                rows.append(PowerRow(sc.label, kern.label, spec.n, m, int(np.count_nonzero(col > 0)),
                                     int(col.size) - fails, fails))
    return PowerTable(tuple(rows), spec.to_dict())


def run_power_study(spec: ExperimentSpec, workers: int = 1, chunk: int | None = None,
                    progress: Callable[[int, int], None] | None = None,
                    on_abort: Callable[[PowerTable], None] | None = None) -> PowerTable:
    """Estimate rejection rates for every scenario and kernel.

    Every (replication, scenario) cell draws from its own
    :func:`replication_stream`, and all kernels are evaluated on the same
    draws, so the table is identical for any ``workers`` and ``chunk``.
    If the run is interrupted, ``on_abort`` receives the table of the
    replications completed so far before the exception propagates.
    """
    reps = spec.replications
    workers = max(1, int(workers))
    if chunk is None:
        chunk = max(1, math.ceil(reps / (4 * workers)))
    bounds = [(a, min(a + chunk, reps)) for a in range(0, reps, chunk)]
    done: dict = {}
    try:
        if workers == 1:
            for a, b in bounds:
                done[a] = _run_chunk(spec, a, b)
                if progress:
                    progress(b, reps)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {a: pool.submit(_run_chunk, spec, a, b) for a, b in bounds}
                finished = 0
                for a, b in bounds:
                    done[a] = futures[a].result()
                    finished += b - a
                    if progress:
                        progress(finished, reps)
    except BaseException:
        if on_abort is not None and done:
            on_abort(_tabulate(spec, _contiguous(done)))
        raise
    return _tabulate(spec, _contiguous(done))


def _contiguous(done: dict) -> np.ndarray:
    # Only a gap-free prefix of replications is reported.
    parts, nxt = [], 0
    for a in sorted(done):
        if a != nxt:
            break
        parts.append(done[a])
        nxt = a + done[a].shape[0]
    return np.concatenate(parts)


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
