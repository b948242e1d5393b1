"""Exact rational helpers shared across the package.

Every numeric quantity a solver component exchanges (thresholds, LP values,
weights, certified bounds) is either a Python int or a `fractions.Fraction`.
There is deliberately no float anywhere in the pipeline.
"""

from __future__ import annotations

from fractions import Fraction


def rat_to_str(x: int | Fraction) -> str:
    """Format an exact rational as ``"p/q"`` in lowest terms."""
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def rat_from_str(text: str) -> Fraction:
    """Parse a ``"p/q"`` rational; the denominator must be positive."""
    num, sep, den = text.partition("/")
    if not sep:
        raise ValueError(f"expected 'p/q' rational, got {text!r}")
    try:
        n = int(num)
        d = int(den)
    except ValueError as exc:
        raise ValueError(f"expected 'p/q' rational, got {text!r}") from exc
    if d <= 0:
        raise ValueError(f"denominator must be positive in {text!r}")
    return Fraction(n, d)


def ceil_frac(x: int | Fraction) -> int:
    f = Fraction(x)
    return -((-f.numerator) // f.denominator)
