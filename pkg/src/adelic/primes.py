"""Small prime-number utilities shared across the package.

Everything here is exact integer arithmetic; no probabilistic shortcuts.
"""

from __future__ import annotations

from typing import Iterator, List

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every n < 3.3 * 10**24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


_prime_cache: List[int] = [2, 3, 5, 7, 11, 13]


def primes() -> Iterator[int]:
    """Yield 2, 3, 5, ... indefinitely, caching as it goes."""
    i = 0
    while True:
        if i == len(_prime_cache):
            q = _prime_cache[-1] + 2
            while not is_prime(q):
                q += 2
            _prime_cache.append(q)
        yield _prime_cache[i]
        i += 1


def primes_up_to(limit: int) -> List[int]:
    """All primes <= limit via a plain sieve (used for Euler products)."""
    if limit < 2:
        return []
    sieve = bytearray([1]) * (limit + 1)
    sieve[0] = sieve[1] = 0
    p = 2
    while p * p <= limit:
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
        p += 1
    return [i for i, flag in enumerate(sieve) if flag]


def prime_factors(n: int) -> List[int]:
    """Sorted distinct prime factors of |n| (empty for 0, 1)."""
    n = abs(n)
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def factorize(n: int) -> List[tuple]:
    """(prime, exponent) pairs for |n| >= 1, in increasing prime order."""
    n = abs(n)
    if n == 0:
        raise ValueError("cannot factor 0")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def divisors(n: int) -> List[int]:
    """Sorted positive divisors of n >= 1."""
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return sorted(out)
