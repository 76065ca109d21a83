"""Low-level numerical kernels shared by the simulation modules.

Exponential-integral evaluation, circularly-symmetric complex Gaussian
sampling, and addressable random-number streams.  The exponential integral
E1 appears inside the closed-form capacity bounds; those formulas actually
consume the scaled product ``exp(x)*E1(x)``, which stays well-behaved long
after the bare E1 has underflowed, so both variants are provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

# The power series converges quickly below 1; the continued fraction takes
# over above it.  Both are accurate near the crossover.
_SERIES_CUTOFF = 1.0
_MAX_SERIES_TERMS = 80
_MAX_CF_ITER = 400


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln(x) + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
    total = -EULER_GAMMA - math.log(x)
    term = 1.0  # x^k / k!
    sign = 1.0
    for k in range(1, _MAX_SERIES_TERMS):
        term *= x / k
        contrib = sign * term / k
        total += contrib
        if abs(contrib) < 1e-17 * abs(total):
            return total
        sign = -sign
    return total  # terms decay factorially; unreachable for x < 1 in practice


def _e1_scaled_cf(x: float) -> float:
    # Continued fraction for exp(x)*E1(x), evaluated with the modified
    # Lentz algorithm:
    #   exp(x)*E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- 9/(x+7- ...))))
    b = x + 1.0
    tiny = 1e-300
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_CF_ITER + 1):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (b + a * d)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 5e-16:
            return h
    raise RuntimeError(f"continued fraction for E1 did not converge at x={x:g}")


def expint_e1(x: float) -> float:
    """Exponential integral E1(x) = int_1^inf exp(-x*t)/t dt for x > 0.

    Parameters
    ----------
    x : float
        Argument, strictly positive.

    Returns
    -------
    float
        E1(x), accurate to ~1e-14 relative.  For x beyond ~700 the true
        value underflows double precision and 0.0 is returned; use
        :func:`expint_e1_scaled` in that regime.

    Raises
    ------
    ValueError
        If ``x <= 0`` (the function has a branch cut on the negative axis
        and diverges at 0).
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"expint_e1 requires finite x > 0, got {x!r}")
    if x < _SERIES_CUTOFF:
        return _e1_series(x)
    return math.exp(-x) * _e1_scaled_cf(x)


def expint_e1_scaled(x: float) -> float:
    """Scaled exponential integral exp(x)*E1(x), overflow-free for large x.

    This is the combination the capacity bounds need: for x >> 1 it decays
    like 1/x while exp(x) and E1(x) separately overflow/underflow.  Valid
    over at least x in [1e-308, 1e8] without special handling.
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"expint_e1_scaled requires finite x > 0, got {x!r}")
    if x < _SERIES_CUTOFF:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_cf(x)


@dataclass(frozen=True)
class RngStream:
    """Addressable deterministic random stream.

    The pair ``(seed, substream)`` fully determines the produced sequence:
    identical pairs give bit-identical draws, distinct substreams are
    statistically independent.  Backed by PCG64 seeded through a
    ``SeedSequence`` spawn key, which is NumPy's supported mechanism for
    exactly this addressing scheme.
    """

    seed: int
    substream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in an unsigned 64-bit int, got {self.seed}")
        if int(self.substream) < 0:
            raise ValueError(f"substream must be non-negative, got {self.substream}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this (seed, substream)."""
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.substream),))
        return np.random.Generator(np.random.PCG64(ss))

    def with_substream(self, substream: int) -> "RngStream":
        return RngStream(self.seed, substream)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def is_diagonal(mat: np.ndarray) -> bool:
    """True if every off-diagonal entry is exactly zero."""
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        return False
    return np.count_nonzero(mat - np.diag(np.diagonal(mat))) == 0


def _check_hermitian(cov: np.ndarray) -> None:
    scale = np.linalg.norm(cov)
    if scale == 0.0:
        return
    if np.linalg.norm(cov - cov.conj().T) > 1e-12 * scale:
        raise ValueError("covariance matrix is not Hermitian")


def cn_factor(cov: np.ndarray) -> np.ndarray:
    """Square-root factor F with F F^H = cov, for CN(0, cov) sampling.

    Eigenvalues below ``-1e-10 * ||cov||`` raise; small negative rounding
    debris above that is clamped to zero, so covariances assembled from
    sums/differences of PSD pieces are accepted.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    _check_hermitian(cov)
    diag = np.diagonal(cov)
    if is_diagonal(cov):
        d = diag.real.copy()
        tol = 1e-10 * (d.max(initial=0.0) if d.size else 0.0)
        if d.min(initial=0.0) < -tol:
            raise ValueError("covariance has a significantly negative eigenvalue")
        np.clip(d, 0.0, None, out=d)
        return np.diag(np.sqrt(d).astype(np.complex128))
    w, v = np.linalg.eigh(cov)
    tol = 1e-10 * max(abs(w[0]), abs(w[-1]))
    if w[0] < -tol:
        raise ValueError(
            f"covariance has eigenvalue {w[0]:g} below the PSD tolerance {-tol:g}"
        )
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


def sample_cn(cov: np.ndarray, rng, size: int | None = None) -> np.ndarray:
    """Draw from the circularly-symmetric complex Gaussian CN(0, cov).

    Parameters
    ----------
    cov : array_like, shape (n, n)
        Hermitian positive semidefinite covariance.
    rng : RngStream or numpy.random.Generator
        Randomness source.
    size : int, optional
        Number of draws.  ``None`` returns a single vector of shape (n,);
        an integer returns shape (size, n).

    Returns
    -------
    numpy.ndarray
        Complex samples with E{h h^H} = cov.
    """
    gen = _as_generator(rng)
    factor = cn_factor(cov)
    n = factor.shape[0]
    shape = (n,) if size is None else (int(size), n)
    g = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
    g *= math.sqrt(0.5)
    return g @ factor.T
