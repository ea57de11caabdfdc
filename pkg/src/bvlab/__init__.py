"""bvlab: prime counting in progressions to sparse moduli, with the sieve, character,
dispersion, large sieve and Perron machinery needed to exercise it numerically."""
from __future__ import annotations

__version__ = "0.1.0"

from .arith import ModulusProfile, factorize, profile, radical, totient
from .primes import PrimeStore, build_prime_store, count_primes, load_cache, primes_in_range, save_cache

__all__ = [
    "ModulusProfile", "PrimeStore", "build_prime_store", "count_primes", "factorize", "load_cache",
    "primes_in_range", "profile", "radical", "save_cache", "totient",
]
