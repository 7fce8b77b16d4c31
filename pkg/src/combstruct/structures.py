"""Structure specifications, builtin families, counting formulas, and total counts.

A decomposable structure family is described by its kind (assembly, multiset,
selection) and the sequence m_1, m_2, ... of available component structures
per size.  Everything else in the package derives from a StructureSpec:

  * N(n, a), the number of structures of weight n with component spectrum a
    (Cauchy-style product formulas, one per kind),
  * p_theta(n), the theta-biased total count, with an exact big-rational path
    (coefficient recurrences of the standard generating function identities)
    and a floating-point path that inverts the conditioning-probability
    closed forms,
  * the uniform / theta-biased law over component spectra.

All counts are exact: integers, or rationals when m_i or theta are rational
(generalized assemblies such as the Ewens family have m_i = kappa*(i-1)!).
"""

from __future__ import annotations

import json
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import ParameterDomainError

BigCount = Union[int, Fraction]
Numeric = Union[int, float, Fraction]


class Kind(Enum):
    ASSEMBLY = "assembly"
    MULTISET = "multiset"
    SELECTION = "selection"


# ---------------------------------------------------------------------------
# small exact-arithmetic helpers shared across modules
# ---------------------------------------------------------------------------

def as_integral(v: BigCount) -> BigCount:
    """Collapse a Fraction with denominator 1 to a plain int."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


def log_big(v: Numeric) -> float:
    """log of a nonnegative int/Fraction/float; safe for huge integers."""
    if isinstance(v, Fraction):
        if v == 0:
            return -math.inf
        return math.log(v.numerator) - math.log(v.denominator)
    if v == 0:
        return -math.inf
    return math.log(v)


def divisors(n: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def divisor_sieve(n_max: int) -> list[list[int]]:
    """divs[i] = sorted divisors of i, for i = 0..n_max, in O(n log n)."""
    divs: list[list[int]] = [[] for _ in range(n_max + 1)]
    for d in range(1, n_max + 1):
        for m in range(d, n_max + 1, d):
            divs[m].append(d)
    return divs


def mobius(n: int) -> int:
    if n < 1:
        raise ParameterDomainError("mobius() needs n >= 1")
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    if n > 1:
        result = -result
    return result


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentVector:
    """A component-size spectrum a = (a_1, ..., a_n); a[k] counts size k+1."""

    n: int
    a: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ParameterDomainError("weight n must be >= 1")
        if len(self.a) != self.n:
            raise ParameterDomainError("component vector must have length n")
        if any(ai < 0 for ai in self.a):
            raise ParameterDomainError("component counts must be nonnegative")

    @property
    def weight(self) -> int:
        return sum((i + 1) * ai for i, ai in enumerate(self.a))

    @property
    def complete(self) -> bool:
        return self.weight == self.n

    @property
    def num_components(self) -> int:
        return sum(self.a)


@dataclass(frozen=True)
class LogMeta:
    """Logarithmic-class parameters: m_i/i! ~ kappa*y^i/i (assemblies) or
    m_i ~ kappa*y^i/i (multisets, selections)."""

    kappa: Numeric
    y: float


@dataclass
class StructureSpec:
    """A structure family: kind, per-size structure counts m_i, and metadata.

    m_fn must return an exact nonnegative int (or Fraction for generalized
    assemblies/multisets); values are memoized per spec.  Selections require
    integer m_i because C(m_i, a_i) does.
    """

    kind: Kind
    name: str
    m_fn: Callable[[int], BigCount] = field(repr=False)
    meta: Optional[LogMeta] = None
    params: dict = field(default_factory=dict)
    _m_cache: dict = field(default_factory=dict, repr=False)
    _table_cache: dict = field(default_factory=dict, repr=False)

    def m(self, i: int) -> BigCount:
        if i < 1:
            raise ParameterDomainError("component size index must be >= 1")
        v = self._m_cache.get(i)
        if v is None:
            v = as_integral(self.m_fn(i))
            if v < 0:
                raise ParameterDomainError(f"m_{i} = {v} is negative")
            if self.kind is Kind.SELECTION and not isinstance(v, int):
                raise ParameterDomainError(
                    "selections require integer m_i (binomial coefficient)")
            self._m_cache[i] = v
        return v

    def log_m(self, i: int) -> float:
        return log_big(self.m(i))

    def to_json_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if "builtin" in self.params:
            d["builtin"] = self.params["builtin"]
            extra = {k: v for k, v in self.params.items() if k != "builtin"}
            if extra:
                d["params"] = {k: _param_out(v) for k, v in extra.items()}
        else:
            d["m"] = [_param_out(self.m(i)) for i in range(1, self.params["m_len"] + 1)]
        return d

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def m_of(spec: StructureSpec, i: int) -> BigCount:
    """m_i for the family: number of component structures of size i."""
    return spec.m(i)


def _param_out(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return v


def _param_in(v) -> Numeric:
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return v


# ---------------------------------------------------------------------------
# builtin families
# ---------------------------------------------------------------------------

def _perm_m(i: int) -> int:
    return math.factorial(i - 1)


def _mapping_m(i: int) -> int:
    # (i-1)! * sum_{j<i} i^j/j!, an exact integer: e^i (i-1)! P(Po(i) < i)
    f = math.factorial(i - 1)
    return sum((f // math.factorial(j)) * i**j for j in range(i))


def _two_regular_m(i: int) -> int:
    return math.factorial(i - 1) // 2 if i >= 3 else 0


def _poly_m(q: int) -> Callable[[int], int]:
    def m(i: int) -> int:
        total = sum(mobius(i // k) * q**k for k in divisors(i))
        assert total % i == 0
        return total // i
    return m


def permutations() -> StructureSpec:
    return StructureSpec(Kind.ASSEMBLY, "permutations", _perm_m,
                         meta=LogMeta(1, 1.0), params={"builtin": "permutations"})


def mappings() -> StructureSpec:
    return StructureSpec(Kind.ASSEMBLY, "mappings", _mapping_m,
                         meta=LogMeta(Fraction(1, 2), math.e),
                         params={"builtin": "mappings"})


def set_partitions() -> StructureSpec:
    return StructureSpec(Kind.ASSEMBLY, "set_partitions", lambda i: 1,
                         params={"builtin": "set_partitions"})


def two_regular_graphs() -> StructureSpec:
    return StructureSpec(Kind.ASSEMBLY, "two_regular_graphs", _two_regular_m,
                         meta=LogMeta(Fraction(1, 2), 1.0),
                         params={"builtin": "two_regular_graphs"})


def esf(kappa: Numeric) -> StructureSpec:
    """Ewens family: generalized assembly with m_i = kappa*(i-1)!."""
    kappa = _param_in(kappa) if isinstance(kappa, str) else kappa
    if kappa <= 0:
        raise ParameterDomainError("ESF parameter kappa must be positive")
    kap = Fraction(kappa) if not isinstance(kappa, float) else kappa
    return StructureSpec(Kind.ASSEMBLY, f"esf({kappa})",
                         lambda i: kap * math.factorial(i - 1),
                         meta=LogMeta(kappa, 1.0),
                         params={"builtin": "esf", "kappa": kappa})


def integer_partitions() -> StructureSpec:
    return StructureSpec(Kind.MULTISET, "integer_partitions", lambda i: 1,
                         params={"builtin": "integer_partitions"})


def polynomials(q: int) -> StructureSpec:
    if q < 2:
        raise ParameterDomainError("polynomials builtin needs q >= 2")
    return StructureSpec(Kind.MULTISET, f"polynomials(q={q})", _poly_m(q),
                         meta=LogMeta(1, float(q)),
                         params={"builtin": "polynomials", "q": q})


def necklaces(q: int) -> StructureSpec:
    spec = polynomials(q)
    spec.name = f"necklaces(q={q})"
    spec.params = {"builtin": "necklaces", "q": q}
    return spec


def distinct_partitions() -> StructureSpec:
    return StructureSpec(Kind.SELECTION, "distinct_partitions", lambda i: 1,
                         params={"builtin": "distinct_partitions"})


def distinct_odd_partitions() -> StructureSpec:
    return StructureSpec(Kind.SELECTION, "distinct_odd_partitions",
                         lambda i: i % 2,
                         params={"builtin": "distinct_odd_partitions"})


def squarefree_polynomials(q: int) -> StructureSpec:
    if q < 2:
        raise ParameterDomainError("squarefree_polynomials builtin needs q >= 2")
    return StructureSpec(Kind.SELECTION, f"squarefree_polynomials(q={q})",
                         _poly_m(q), meta=LogMeta(1, float(q)),
                         params={"builtin": "squarefree_polynomials", "q": q})


BUILTINS: dict[str, Callable[..., StructureSpec]] = {
    "permutations": permutations,
    "mappings": mappings,
    "set_partitions": set_partitions,
    "two_regular_graphs": two_regular_graphs,
    "esf": esf,
    "integer_partitions": integer_partitions,
    "polynomials": polynomials,
    "necklaces": necklaces,
    "distinct_partitions": distinct_partitions,
    "distinct_odd_partitions": distinct_odd_partitions,
    "squarefree_polynomials": squarefree_polynomials,
}


def from_m_list(kind: Union[Kind, str], m_list: Sequence[Numeric],
                name: str = "custom") -> StructureSpec:
    """User-defined family from an explicit finite m list; m_i = 0 beyond it."""
    kind = Kind(kind) if not isinstance(kind, Kind) else kind
    ms = [as_integral(Fraction(v) if isinstance(v, str) else v) for v in m_list]
    spec = StructureSpec(kind, name,
                         lambda i: ms[i - 1] if i <= len(ms) else 0,
                         params={"m_len": len(ms)})
    for i, v in enumerate(ms, start=1):
        spec.m(i)  # validate eagerly
    return spec


def spec_from_json_dict(d: dict) -> StructureSpec:
    """Build a spec from the CLI's JSON format.

    {"kind": ..., "builtin": <name>, "params": {...}} or {"kind": ..., "m": [...]}
    """
    if "builtin" in d:
        name = d["builtin"]
        factory = BUILTINS.get(name)
        if factory is None:
            raise ParameterDomainError(f"unknown builtin {name!r}")
        params = {k: _param_in(v) for k, v in d.get("params", {}).items()}
        spec = factory(**params)
        if "kind" in d and Kind(d["kind"]) is not spec.kind:
            raise ParameterDomainError(
                f"builtin {name!r} has kind {spec.kind.value!r}, not {d['kind']!r}")
        return spec
    if "m" in d:
        if "kind" not in d:
            raise ParameterDomainError("explicit-m spec needs a 'kind' field")
        return from_m_list(d["kind"], d["m"])
    raise ParameterDomainError("spec JSON needs 'builtin' or 'm'")


def load_spec(path: str) -> StructureSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# counting formulas
# ---------------------------------------------------------------------------

def _binom_exact(m: BigCount, k: int) -> BigCount:
    """C(m, k) for integer or rational m >= 0, integer k >= 0."""
    if isinstance(m, int):
        if k > m:
            return 0
        return math.comb(m, k)
    num = Fraction(1)
    for j in range(k):
        num *= (m - j)
    return num / math.factorial(k)


def _rising_binom(m: BigCount, k: int) -> BigCount:
    """C(m + k - 1, k) = m(m+1)...(m+k-1)/k! for integer or rational m."""
    if isinstance(m, int):
        return math.comb(m + k - 1, k) if m > 0 or k == 0 else 0
    num = Fraction(1)
    for j in range(k):
        num *= (m + j)
    return num / math.factorial(k)


def count_N(spec: StructureSpec, v: Union[ComponentVector, Sequence[int]],
            n: Optional[int] = None) -> BigCount:
    """Number of weight-n structures with component spectrum a (exact).

    Returns 0 unless sum i*a_i = n.  Assemblies use the generalized Cauchy
    product n! prod m_i^{a_i} / (i!^{a_i} a_i!); multisets prod C(m_i+a_i-1, a_i);
    selections prod C(m_i, a_i).
    """
    if isinstance(v, ComponentVector):
        a, n = v.a, v.n
    else:
        a = tuple(v)
        n = len(a) if n is None else n
    if any(ai < 0 for ai in a):
        raise ParameterDomainError("component counts must be nonnegative")
    if sum((i + 1) * ai for i, ai in enumerate(a)) != n:
        return 0
    if spec.kind is Kind.ASSEMBLY:
        total: BigCount = Fraction(math.factorial(n))
        for i, ai in enumerate(a, start=1):
            if ai:
                mi = spec.m(i)
                total *= Fraction(mi) ** ai
                total /= Fraction(math.factorial(i)) ** ai * math.factorial(ai)
        return as_integral(total)
    total = 1
    for i, ai in enumerate(a, start=1):
        if ai:
            mi = spec.m(i)
            f = _rising_binom(mi, ai) if spec.kind is Kind.MULTISET \
                else _binom_exact(mi, ai)
            if f == 0:
                return 0
            total *= f
    return as_integral(total)


# ---------------------------------------------------------------------------
# exact p_theta(n) tables via generating-function coefficient recurrences
# ---------------------------------------------------------------------------

def ptheta_table(spec: StructureSpec, n: int, theta: Numeric = 1) -> list[BigCount]:
    """[p_theta(0), ..., p_theta(n)] exactly, by coefficient recurrence.

    Assemblies:  p(n) = sum_j C(n-1, j-1) theta m_j p(n-j)       (EGF exp relation)
    Multisets:   n p(n) = sum_i [sum_{k|i} k m_k theta^{i/k}] p(n-i)
    Selections:  same with g(i) = -sum_{k|i} k m_k (-theta)^{i/k}

    theta must be an int or Fraction for exactness.
    """
    if not isinstance(theta, (int, Fraction)):
        raise ParameterDomainError("exact p_theta table needs rational theta")
    theta = as_integral(Fraction(theta))
    key = ("ptheta", theta)
    cached = spec._table_cache.get(key)
    if cached is not None and len(cached) > n:
        return cached[: n + 1]

    p: list[BigCount] = [1]
    if spec.kind is Kind.ASSEMBLY:
        for nn in range(1, n + 1):
            acc = Fraction(0)
            for j in range(1, nn + 1):
                mj = spec.m(j)
                if mj:
                    acc += math.comb(nn - 1, j - 1) * theta * Fraction(mj) * p[nn - j]
            p.append(as_integral(acc))
    else:
        divs = divisor_sieve(n)
        sign = 1 if spec.kind is Kind.MULTISET else -1
        th = theta if spec.kind is Kind.MULTISET else -theta
        g: list[BigCount] = [0]
        for i in range(1, n + 1):
            gi = sum(k * spec.m(k) * th ** (i // k) for k in divs[i] if spec.m(k))
            g.append(sign * gi)
        for nn in range(1, n + 1):
            acc = sum(Fraction(g[i]) * p[nn - i] for i in range(1, nn + 1) if g[i])
            p.append(as_integral(Fraction(acc, nn)))
    spec._table_cache[key] = p
    return p


def log_ptheta_table(spec: StructureSpec, n: int, theta: Numeric = 1,
                     x: Optional[Numeric] = None) -> list[float]:
    """[log p_theta(k)]_{k<=n} as floats.

    Exact route (rational theta) up to moderate n; otherwise one scaled
    float recursion of the full weighted sum delivers the whole table,
    since x^k p_theta(k) [/k! for assemblies] is the k-th coefficient of
    the generating function restricted to sizes <= n.
    """
    if isinstance(theta, (int, Fraction)) and n <= 512:
        return [log_big(v) for v in ptheta_table(spec, n, theta)]
    from . import sumdist  # deferred: sumdist imports this module
    from .indep_process import TiltedParams, choose_x, XStrategy
    if x is None:
        x = choose_x(spec, n, theta, XStrategy.EXACT_MEAN)
    params = TiltedParams(x=x, theta=theta)
    params.validate(spec)
    lx = math.log(float(x))
    logs = sumdist._log_coeff_table(spec, n, params)
    out = []
    for k in range(n + 1):
        v = logs[k] - k * lx
        if spec.kind is Kind.ASSEMBLY:
            v += math.lgamma(k + 1)
        out.append(v)
    return out


def p_total(spec: StructureSpec, n: int, theta: Numeric = 1, *,
            exact: Optional[bool] = None,
            x: Optional[Numeric] = None) -> Union[BigCount, float]:
    """Total theta-biased count p_theta(n) = sum_k p(n,k) theta^k.

    exact=True (default for rational theta and n <= 512) returns an exact
    int/Fraction.  The float path inverts the closed forms relating
    p_theta(n) to P_theta(T_n = n) at a free parameter x; the result does
    not depend on the x used.
    """
    if n < 0:
        raise ParameterDomainError("n must be >= 0")
    if n == 0:
        return 1
    if exact is None:
        exact = isinstance(theta, (int, Fraction)) and n <= 512
    if exact:
        return ptheta_table(spec, n, theta)[n]
    return math.exp(log_p_total(spec, n, theta, x=x))


def log_p_total(spec: StructureSpec, n: int, theta: Numeric = 1,
                x: Optional[Numeric] = None) -> float:
    """log p_theta(n) by closed-form inversion at a valid x (float path)."""
    from . import sumdist
    from .indep_process import TiltedParams, choose_x, XStrategy
    if n == 0:
        return 0.0
    if x is None:
        x = choose_x(spec, n, theta, XStrategy.EXACT_MEAN)
    params = TiltedParams(x=x, theta=theta)
    params.validate(spec)
    log_pt = math.log(sumdist.prob_T_eq_n(spec, n, params, method="recursion"))
    log_seed = sumdist.log_seed(spec, range(1, n + 1), params)
    out = log_pt - log_seed - n * math.log(float(x))
    if spec.kind is Kind.ASSEMBLY:
        out += math.lgamma(n + 1)
    return out


# ---------------------------------------------------------------------------
# the combinatorial law
# ---------------------------------------------------------------------------

def uniform_pmf(spec: StructureSpec, v: Union[ComponentVector, Sequence[int]],
                theta: Numeric = 1, n: Optional[int] = None) -> Union[Fraction, float]:
    """P_theta(C(n) = a) = theta^{sum a} N(n, a) / p_theta(n); 0 if incomplete.

    Exact Fraction for rational theta (and rational m_i), float otherwise.
    """
    if isinstance(v, ComponentVector):
        a, n = v.a, v.n
    else:
        a = tuple(v)
        n = len(a) if n is None else n
    nn = count_N(spec, a, n)
    if nn == 0:
        return Fraction(0) if isinstance(theta, (int, Fraction)) else 0.0
    k = sum(a)
    if isinstance(theta, (int, Fraction)):
        return Fraction(theta) ** k * nn / ptheta_table(spec, n, theta)[n]
    return float(theta) ** k * float(nn) / p_total(spec, n, theta, exact=False)
