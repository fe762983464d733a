"""Exact rational numbers.

All lengths, offsets and times are GMP rationals; they behave like
``fractions.Fraction`` but are an order of magnitude faster.
"""

from gmpy2 import mpq as Q

__all__ = ["Q"]
