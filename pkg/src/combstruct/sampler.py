"""Exact samplers for C(n) and the refined D(n) by rejection.

The conditioning identity makes rejection exact: draw the independent
process, keep it when the weighted sum hits n.  Per-index draws use
inverse-CDF lookup on the truncated laws of Z_i (support 0..n//i; anything
beyond forces T > n and is lumped into an immediate-reject marker), so
huge m_i never touch integer-width limits and all three kinds share one
code path.  Trials are processed in fixed-size vectorized blocks: a block
of uniforms is compared against P(Z_i = 0) in one shot and only the rare
exceedances take the scalar path.  This replaces a per-index early-abort
loop; the accepted law is identical and block order is deterministic, so
identical (seed, stream) means identical output.

The RNG is numpy's counter-based Philox, streamed by spawn key: stream k
of seed s is Generator(Philox(SeedSequence(s, spawn_key=(k,)))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import NumericGuardError, ParameterDomainError
from .structures import ComponentVector, Kind, StructureSpec
from .indep_process import TiltedParams, z_law
from . import sumdist

_BLOCK = 4096  # trials per vectorized block; fixed for reproducibility
_UNDERFLOW_GUARD = 1e-12


@dataclass(frozen=True)
class RngState:
    """Reproducible stream address: (seed, stream) -> Philox generator."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def with_stream(self, stream: int) -> "RngState":
        return RngState(seed=self.seed, stream=stream)


@dataclass
class SampleBatch:
    samples: list
    trials: int
    accepted: int
    acceptance_exact: float

    def __post_init__(self):
        if self.accepted != len(self.samples) or self.accepted > self.trials:
            raise ParameterDomainError("inconsistent sample accounting")


class _IndexTables:
    """Truncated per-index inverse-CDF tables for Z_1..Z_n."""

    def __init__(self, spec: StructureSpec, n: int, params: TiltedParams):
        params.validate(spec)
        self.n = n
        self.cdf0 = np.ones(n)          # P(Z_i = 0), column i-1
        self.cum: dict[int, np.ndarray] = {}
        for i in range(1, n + 1):
            if spec.m(i) == 0:
                continue
            law = z_law(spec, i, params)
            k_max = n // i
            pmf = law.pmf_array(k_max)
            self.cdf0[i - 1] = pmf[0]
            if pmf[0] < 1.0:
                self.cum[i] = np.cumsum(pmf)

    def draw_block(self, rng: np.random.Generator, block: int):
        """Returns (T, rows, cols, zs) for `block` trials.

        Censored trials (some Z_i beyond its truncated support, so T > n for
        sure) get T = n + 1; (rows, cols, zs) list the nonzero draws.
        """
        u = rng.random((block, self.n))
        t = np.zeros(block, dtype=np.int64)
        rows, cols = np.nonzero(u >= self.cdf0[None, :])
        zs = np.zeros(len(rows), dtype=np.int64)
        censored = np.zeros(block, dtype=bool)
        for col in np.unique(cols):
            i = int(col) + 1
            sel = cols == col
            cum = self.cum.get(i)
            if cum is None:  # mass above 0 below double resolution
                continue
            z = np.searchsorted(cum, u[rows[sel], col], side="right")
            over = z > self.n // i
            if over.any():
                censored[rows[sel][over]] = True
                z = np.where(over, 0, z)
            zs[sel] = z
            np.add.at(t, rows[sel], i * z)
        t[censored | (t > self.n)] = self.n + 1
        return t, rows, cols, zs


def _tables(spec: StructureSpec, n: int, params: TiltedParams) -> _IndexTables:
    key = ("sampler_tables", n, params.fx, params.ftheta)
    tabs = spec._table_cache.get(key)
    if tabs is None:
        tabs = _IndexTables(spec, n, params)
        spec._table_cache[key] = tabs
    return tabs


def sample_components(spec: StructureSpec, n: int, params: TiltedParams,
                      count: int, rng: RngState,
                      streams: int = 1) -> SampleBatch:
    """Exact draws from the P_theta law of C(n) by rejection on {T_n = n}.

    Refuses to run when the exact acceptance probability P_theta(T_n = n)
    is below 1e-12.  With streams > 1 the work is split over independent
    substreams (stream indices rng.stream + k) and merged in stream order,
    so the result is deterministic for fixed (seed, stream, count, streams).
    """
    if count < 0:
        raise ParameterDomainError("count must be >= 0")
    p_exact = sumdist.prob_T_eq_n(spec, n, params)
    if p_exact < _UNDERFLOW_GUARD:
        raise NumericGuardError(
            f"acceptance probability {p_exact:.3g} below {_UNDERFLOW_GUARD}; "
            "choose a better x")
    tabs = _tables(spec, n, params)
    per = [count // streams + (1 if k < count % streams else 0)
           for k in range(streams)]
    jobs = [(tabs, n, want, rng.with_stream(rng.stream + k))
            for k, want in enumerate(per)]
    if streams > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=streams) as pool:
            results = list(pool.map(lambda j: _sample_stream(*j), jobs))
    else:
        results = [_sample_stream(*j) for j in jobs]
    samples: list[ComponentVector] = []
    trials = 0
    for got, used in results:  # merged in stream order: deterministic
        samples.extend(got)
        trials += used
    return SampleBatch(samples=samples, trials=trials, accepted=len(samples),
                       acceptance_exact=p_exact)


def _sample_stream(tabs: _IndexTables, n: int, want: int, rng_state: RngState):
    rng = rng_state.generator()
    out: list[ComponentVector] = []
    trials = 0
    while len(out) < want:
        t, rows, cols, zs = tabs.draw_block(rng, _BLOCK)
        hits = np.nonzero(t == n)[0]
        consumed = _BLOCK
        keep = np.isin(rows, hits)
        per_row: dict[int, list[tuple[int, int]]] = {}
        for r, c, z in zip(rows[keep].tolist(), cols[keep].tolist(),
                           zs[keep].tolist()):
            if z:
                per_row.setdefault(r, []).append((c + 1, z))
        for row in hits.tolist():
            a = [0] * n
            for i, z in per_row.get(row, ()):
                a[i - 1] = z
            out.append(ComponentVector(n=n, a=tuple(a)))
            if len(out) == want:
                consumed = row + 1
                break
        trials += consumed
    return out[:want], trials


def draw_T(spec: StructureSpec, n: int, params: TiltedParams, count: int,
           rng: RngState) -> np.ndarray:
    """Unconditioned draws of T_n (values above n reported as n + 1)."""
    tabs = _tables(spec, n, params)
    gen = rng.generator()
    outs = []
    left = count
    while left > 0:
        t, _, _, _ = tabs.draw_block(gen, _BLOCK)
        outs.append(t[: min(left, _BLOCK)])
        left -= _BLOCK
    return np.concatenate(outs)[:count]


# ---------------------------------------------------------------------------
# refined sampling
# ---------------------------------------------------------------------------

def sample_refined(spec: StructureSpec, n: int, params: TiltedParams,
                   count: int, rng: RngState) -> list[dict]:
    """Exact draws of the refined process D(n) = (Y | T_n = n).

    Samples C first, then splits each count a_i over the m_i structures of
    size i from the exact conditional law of (Y_i1, ..., Y_im) given the sum:
    uniform multinomial cells for assemblies, a uniform composition (stars
    and bars) for multisets, a uniform a_i-subset for selections.  Each
    sample is a dict i -> tuple of m_i counts (sizes with a_i = 0 omitted).
    """
    batch = sample_components(spec, n, params, count, rng)
    gen = rng.with_stream(rng.stream + 1_000_003).generator()
    out = []
    for v in batch.samples:
        d: dict[int, tuple[int, ...]] = {}
        for i, ai in enumerate(v.a, start=1):
            if ai == 0:
                continue
            mi = spec.m(i)
            if not isinstance(mi, int) or mi > 10**6:
                raise ParameterDomainError(
                    "refined sampling needs modest integer m_i")
            d[i] = _split_count(spec.kind, ai, mi, gen)
        out.append(d)
    return out


def _split_count(kind: Kind, a: int, m: int, gen: np.random.Generator) -> tuple:
    if kind is Kind.ASSEMBLY:
        return tuple(gen.multinomial(a, np.full(m, 1.0 / m)).tolist())
    if kind is Kind.MULTISET:
        if m == 1:
            return (a,)
        cuts = np.sort(gen.choice(a + m - 1, size=m - 1, replace=False))
        bounds = np.concatenate([[-1], cuts, [a + m - 1]])
        return tuple((np.diff(bounds) - 1).tolist())
    if a > m:
        raise AssertionError("selection multiplicity above m_i on an accepted "
                             "sample; this has probability zero")
    picks = gen.choice(m, size=a, replace=False)
    d = np.zeros(m, dtype=int)
    d[picks] = 1
    return tuple(d.tolist())


# ---------------------------------------------------------------------------
# derived statistics
# ---------------------------------------------------------------------------

@dataclass
class StatsTable:
    """Per-sample functionals and their summary moments.

    columns: K (component count), L (largest part), J (distinct sizes),
    D (mean size of a uniformly chosen component given the sample), Dstar
    (mean size-biased component size given the sample).  D and Dstar are
    the per-sample conditional means, so their averages estimate E D_n and
    E D*_n with reduced variance and no extra randomness.
    """

    columns: dict
    n: int

    def summary(self) -> dict:
        out = {}
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            mean = float(col.mean())
            var = float(col.var(ddof=1)) if len(col) > 1 else 0.0
            out[name] = {"mean": mean, "var": var,
                         "se": math.sqrt(var / len(col)) if len(col) > 1 else 0.0}
        return out


def statistics(samples: Iterable[ComponentVector]) -> StatsTable:
    samples = list(samples)
    if not samples:
        raise ParameterDomainError("empty sample batch")
    n = samples[0].n
    K, L, J, D, Dstar = [], [], [], [], []
    for v in samples:
        a = np.asarray(v.a)
        sizes = np.nonzero(a)[0] + 1
        k = int(a.sum())
        K.append(k)
        L.append(int(sizes.max()) if len(sizes) else 0)
        J.append(len(sizes))
        D.append(float(np.dot(sizes, a[sizes - 1])) / k if k else 0.0)
        Dstar.append(float(np.dot(sizes * sizes, a[sizes - 1])) / n)
    return StatsTable(columns={"K": K, "L": L, "J": J, "D": D, "Dstar": Dstar},
                      n=n)


def size_biased_pmf_estimate(samples: Iterable[ComponentVector]) -> np.ndarray:
    """Average of i a_i / n across samples: estimates P(D*_n = i), i = 1..n."""
    samples = list(samples)
    if not samples:
        raise ParameterDomainError("empty sample batch")
    n = samples[0].n
    acc = np.zeros(n)
    for v in samples:
        acc += np.arange(1, n + 1) * np.asarray(v.a) / n
    return acc / len(samples)
