"""Special functions and combinatorial tuples for the coverage analysis.

The interference Laplace transforms reduce to Gauss hypergeometric values
2F1(a, b; c; z) on the negative real axis, with |z| anywhere from 0 to ~1e7,
and their derivatives need Pochhammer symbols plus the partition tuples of
Faa di Bruno's formula.  Everything here is real-argument only.
"""
from __future__ import annotations

import math

import numpy as np

MAX_TERMS = 10_000
TAIL_TOL = 1e-15

# |z| <= this: the defining series converges acceptably
_DIRECT_LIMIT = 0.9
# |z| above this: prefer the 1/z connection formula over the Pfaff series
_INV_LIMIT = 5.0
# a - b closer than this to an integer makes the connection formula
# numerically degenerate (gamma prefactors near poles)
_DEGENERATE_TOL = 1e-3

_INT_TOL = 1e-9


class SpecialFunctionError(Exception):
    """Series failed to converge; carries the offending arguments."""

    def __init__(self, message: str, a: float, b: float, c: float, z: float,
                 terms: int):
        super().__init__(
            f"{message}: 2F1({a}, {b}; {c}; z) at z={z} after {terms} terms")
        self.args_abc = (a, b, c)
        self.z = z
        self.terms = terms


def rising_factorial(x, n: int):
    """Pochhammer symbol x (x+1) ... (x+n-1); the empty product is 1."""
    if n < 0:
        raise ValueError("order must be >= 0")
    result = 1 if isinstance(x, int) else 1.0
    for i in range(n):
        result = result * (x + i)
    return result


def _as_int(x: float):
    """Round to int when within tolerance, else None."""
    r = round(x)
    return r if abs(x - r) < _INT_TOL else None


def _series(a: float, b: float, c: float, w: np.ndarray) -> np.ndarray:
    """Defining Gauss series, vectorized over w; |w| < 1 or terminating."""
    term = np.ones_like(w)
    total = np.ones_like(w)
    small_prev = False
    for n in range(MAX_TERMS):
        term = term * ((a + n) * (b + n) / ((c + n) * (1.0 + n))) * w
        total += term
        small = bool(np.all(np.abs(term) <= TAIL_TOL * np.maximum(np.abs(total), 1e-300)))
        if small and small_prev:
            return total
        small_prev = small
    worst = int(np.argmax(np.abs(term)))
    raise SpecialFunctionError("series did not converge", a, b, c,
                               float(w[worst]), MAX_TERMS)


def _pfaff(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    """Pfaff transform z -> z / (z - 1), choosing the better-behaved variant."""
    w = z / (z - 1.0)
    ca, cb = _as_int(c - a), _as_int(c - b)
    if ca is not None and ca <= 0:
        return (1.0 - z) ** (-b) * _series(c - a, b, c, w)  # terminating
    if cb is not None and cb <= 0:
        return (1.0 - z) ** (-a) * _series(a, c - b, c, w)  # terminating
    if a >= b:
        return (1.0 - z) ** (-b) * _series(c - a, b, c, w)
    return (1.0 - z) ** (-a) * _series(a, c - b, c, w)


def _inv_z(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    """Connection formula in 1/z (DLMF 15.8.2); needs a - b non-integer."""
    ga = math.gamma(c) * math.gamma(b - a) / (math.gamma(b) * math.gamma(c - a))
    gb = math.gamma(c) * math.gamma(a - b) / (math.gamma(a) * math.gamma(c - b))
    inv = 1.0 / z
    term_a = ga * (-z) ** (-a) * _series(a, a - c + 1.0, a - b + 1.0, inv)
    term_b = gb * (-z) ** (-b) * _series(b, b - c + 1.0, b - a + 1.0, inv)
    return term_a + term_b


def _integer_closed_form(a_int: int, b_int: int, z: np.ndarray) -> np.ndarray:
    """Exact finite form of 2F1(A, B; B+1; z) for positive integers A, B."""
    total = np.zeros_like(z)
    for i in range(b_int):
        e = i - a_int + 1
        if e == 0:
            g = -np.log1p(-z)
        else:
            g = (1.0 - (1.0 - z) ** e) / e
        total += math.comb(b_int - 1, i) * (-1.0) ** i * g
    return b_int * z ** (-float(b_int)) * total


def _mpmath_fallback(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    # near-degenerate parameter combinations at large |z|: delegate to
    # arbitrary precision rather than lose digits to gamma-pole cancellation
    import mpmath as mp

    with mp.workdps(30):
        return np.array([float(mp.hyp2f1(a, b, c, zi)) for zi in z])


def hyp2f1(a: float, b: float, c: float, z):
    """Gauss hypergeometric 2F1(a, b; c; z) for real parameters and z <= 0.

    Accepts a scalar or an ndarray z and evaluates to ~1e-12 relative
    accuracy.  The defining series is used for |z| <= 0.9; beyond that a
    Pfaff transform maps z into (0, 1), and for large |z| the 1/z connection
    formula (or an exact finite form at integer parameters) takes over.
    Raises SpecialFunctionError if a series fails to converge within the
    term cap.
    """
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    zs = np.atleast_1d(arr).astype(float).ravel()
    if zs.size and not np.all(np.isfinite(zs)):
        raise ValueError("z must be finite")
    if zs.size and np.any(zs > 0):
        raise ValueError("hyp2f1 is implemented for z <= 0 only")
    c_int = _as_int(c)
    if c_int is not None and c_int <= 0:
        raise ValueError("c must not be a non-positive integer")

    out = np.empty_like(zs)
    a_int, b_int = _as_int(a), _as_int(b)
    terminating = (a_int is not None and a_int <= 0) or (b_int is not None and b_int <= 0)

    zero = zs == 0.0
    out[zero] = 1.0
    rest = ~zero
    if not np.any(rest):
        return float(out[0]) if scalar else out.reshape(arr.shape)

    if terminating:
        out[rest] = _series(a, b, c, zs[rest])
        return float(out[0]) if scalar else out.reshape(arr.shape)

    absz = np.abs(zs)
    direct = rest & (absz <= _DIRECT_LIMIT)
    if np.any(direct):
        out[direct] = _series(a, b, c, zs[direct])
    mid = rest & (absz > _DIRECT_LIMIT) & (absz < _INV_LIMIT)
    if np.any(mid):
        out[mid] = _pfaff(a, b, c, zs[mid])
    far = rest & (absz >= _INV_LIMIT)
    if np.any(far):
        ca, cb = _as_int(c - a), _as_int(c - b)
        if (ca is not None and ca <= 0) or (cb is not None and cb <= 0):
            out[far] = _pfaff(a, b, c, zs[far])  # terminating variant
        elif abs((a - b) - round(a - b)) > _DEGENERATE_TOL:
            out[far] = _inv_z(a, b, c, zs[far])
        elif (a_int is not None and a_int >= 1 and b_int is not None
              and b_int >= 1 and _as_int(c - b) == 1):
            out[far] = _integer_closed_form(a_int, b_int, zs[far])
        else:
            out[far] = _mpmath_fallback(a, b, c, zs[far])

    return float(out[0]) if scalar else out.reshape(arr.shape)


def hyp2f1_derivative(a: float, b: float, c: float, z, order: int):
    """d^q/dz^q 2F1(a, b; c; z) via the contiguous parameter shift."""
    factor = (rising_factorial(a, order) * rising_factorial(b, order)
              / rising_factorial(c, order))
    return factor * hyp2f1(a + order, b + order, c + order, z)


def multinomial_tuples(n: int) -> list[tuple[tuple[int, int, int], int]]:
    """All (i, j, k) with i + j + k = n and the coefficient n! / (i! j! k!).

    Ordered lexicographically; coefficients are exact integers.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    fact_n = math.factorial(n)
    out = []
    for i in range(n + 1):
        for j in range(n - i + 1):
            k = n - i - j
            coeff = fact_n // (math.factorial(i) * math.factorial(j) * math.factorial(k))
            out.append(((i, j, k), coeff))
    return out


def faa_di_bruno_tuples(n: int) -> list[tuple[tuple[int, ...], int]]:
    """Partition multiplicity tuples for the n-th derivative of exp(y(s)).

    Each entry is ((j_1, ..., j_n), coeff) with sum(i * j_i) = n and
    coeff = n! / (prod j_i! * prod (i!)^j_i), so that
    d^n/ds^n exp(y) = exp(y) * sum coeff * prod (y^(i))^j_i.
    Ordered lexicographically; coefficients are exact integers.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return [((), 1)]
    tuples: list[tuple[int, ...]] = []

    def descend(part: int, remaining: int, acc: list[int]):
        if part == 0:
            if remaining == 0:
                tuples.append(tuple(acc))
            return
        for count in range(remaining // part, -1, -1):
            descend(part - 1, remaining - part * count, [count] + acc)

    descend(n, n, [])
    tuples.sort()
    fact_n = math.factorial(n)
    out = []
    for js in tuples:
        denom = 1
        for i, j in enumerate(js, start=1):
            denom *= math.factorial(j) * math.factorial(i) ** j
        out.append((js, fact_n // denom))
    return out
