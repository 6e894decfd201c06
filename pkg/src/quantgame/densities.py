"""Probability densities on the open unit interval.

Beta sources, additive-noise kernels, and mixed continuous+atomic
mixtures. All interval queries use the half-open convention (a, b],
and partial moments are computed in closed form (regularized
incomplete beta for the continuous parts, polynomial antiderivatives
for the noise kernels), which keeps errors near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import special

# clamping margin for endpoint-singular beta pdfs (alpha < 1 or beta < 1)
_EDGE = 1e-12

# below this mass a cell is considered empty
EMPTY_CELL_MASS = 1e-12


class DomainError(ValueError):
    """Evaluation point outside the open unit interval."""


class EmptyCellError(ValueError):
    """Conditional moment requested over a cell with (numerically) no mass."""


@dataclass(frozen=True)
class BetaDensity:
    """Beta(alpha, beta_param) law on (0, 1)."""

    alpha: float
    beta_param: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta_param > 0):
            raise ValueError(
                "beta shape parameters must be positive, got "
                f"({self.alpha}, {self.beta_param})"
            )

    def pdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), _EDGE, 1.0 - _EDGE)
        a, b = self.alpha, self.beta_param
        logp = (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - special.betaln(a, b)
        return np.exp(logp)

    def cdf(self, x):
        return special.betainc(self.alpha, self.beta_param, np.clip(x, 0.0, 1.0))

    def partial_moments(self, a: float, b: float) -> Tuple[float, float, float]:
        """(m0, m1, m2): integrals of 1, x, x^2 against the pdf over (a, b]."""
        al, be = self.alpha, self.beta_param
        ia = special.betainc(al, be, a)
        ib = special.betainc(al, be, b)
        m0 = ib - ia
        mu1 = al / (al + be)
        m1 = mu1 * (special.betainc(al + 1, be, b) - special.betainc(al + 1, be, a))
        mu2 = mu1 * (al + 1) / (al + be + 1)
        m2 = mu2 * (special.betainc(al + 2, be, b) - special.betainc(al + 2, be, a))
        return float(m0), float(m1), float(m2)

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta_param)

    def is_log_concave(self) -> bool:
        return self.alpha >= 1.0 and self.beta_param >= 1.0


class KernelShape(str, Enum):
    POINT = "point"
    UNIFORM = "uniform"
    TRIANGULAR = "triangular"


@dataclass(frozen=True)
class NoiseKernel:
    """Zero-mean additive noise applied to a transmitted word.

    `point` is the noiseless Dirac case (halfwidth 0); `uniform` and
    `triangular` have support (-halfwidth, +halfwidth) around the word.
    """

    shape: KernelShape = KernelShape.POINT
    halfwidth: float = 0.0

    def __post_init__(self):
        shape = KernelShape(self.shape)
        object.__setattr__(self, "shape", shape)
        if self.halfwidth < 0:
            raise ValueError("kernel halfwidth must be nonnegative")
        if shape is KernelShape.POINT and self.halfwidth != 0.0:
            raise ValueError("point kernel must have halfwidth 0")
        if shape is not KernelShape.POINT and self.halfwidth == 0.0:
            raise ValueError(f"{shape.value} kernel needs a positive halfwidth")

    @property
    def std(self) -> float:
        if self.shape is KernelShape.POINT:
            return 0.0
        if self.shape is KernelShape.UNIFORM:
            return self.halfwidth / math.sqrt(3.0)
        return self.halfwidth / math.sqrt(6.0)

    def check_word(self, y: float) -> None:
        """Feasibility of centering this kernel at word y inside (0, 1)."""
        if not 0.0 < y < 1.0:
            raise DomainError(f"word {y} not strictly inside (0, 1)")
        if self.std >= min(y, 1.0 - y):
            raise ValueError(
                f"kernel std {self.std:.3g} too wide for word {y:.6g}"
            )
        if self.shape is not KernelShape.POINT and (
            y - self.halfwidth <= 0.0 or y + self.halfwidth >= 1.0
        ):
            raise ValueError(
                f"kernel support around word {y:.6g} leaves the unit interval"
            )

    def pdf(self, x, center: float):
        """Density at x of center + noise. Zero for point kernels."""
        x = np.asarray(x, dtype=float)
        h = self.halfwidth
        if self.shape is KernelShape.POINT:
            return np.zeros_like(x)
        if self.shape is KernelShape.UNIFORM:
            inside = np.abs(x - center) < h
            return np.where(inside, 1.0 / (2.0 * h), 0.0)
        t = np.abs(x - center)
        return np.where(t < h, (h - t) / (h * h), 0.0)

    def partial_moments(self, a: float, b: float, center: float) -> Tuple[float, float, float]:
        """(m0, m1, m2) of the smeared density over (a, b].

        Point kernels are Dirac masses: the atom is in (a, b] iff
        a < center <= b.
        """
        h = self.halfwidth
        if self.shape is KernelShape.POINT:
            if a < center <= b:
                return 1.0, center, center * center
            return 0.0, 0.0, 0.0
        lo, hi = center - h, center + h
        if self.shape is KernelShape.UNIFORM:
            l, u = max(a, lo), min(b, hi)
            if u <= l:
                return 0.0, 0.0, 0.0
            inv = 1.0 / (2.0 * h)
            m0 = (u - l) * inv
            m1 = (u * u - l * l) / 2.0 * inv
            m2 = (u ** 3 - l ** 3) / 3.0 * inv
            return m0, m1, m2
        # triangular: density (h + s*(x - center)) / h^2 with s = +1 left, -1 right
        out = [0.0, 0.0, 0.0]
        for seg_lo, seg_hi, s in ((lo, center, 1.0), (center, hi, -1.0)):
            l, u = max(a, seg_lo), min(b, seg_hi)
            if u <= l:
                continue
            c0 = h - s * center
            inv = 1.0 / (h * h)
            d1 = u - l
            d2 = (u * u - l * l) / 2.0
            d3 = (u ** 3 - l ** 3) / 3.0
            d4 = (u ** 4 - l ** 4) / 4.0
            out[0] += (c0 * d1 + s * d2) * inv
            out[1] += (c0 * d2 + s * d3) * inv
            out[2] += (c0 * d3 + s * d4) * inv
        return tuple(out)

    def sample(self, rng: np.random.Generator, size=None):
        """Draw noise values (not shifted by any word)."""
        if self.shape is KernelShape.POINT:
            return np.zeros(size) if size is not None else 0.0
        if self.shape is KernelShape.UNIFORM:
            return rng.uniform(-self.halfwidth, self.halfwidth, size)
        return rng.triangular(-self.halfwidth, 0.0, self.halfwidth, size)


POINT_KERNEL = NoiseKernel(KernelShape.POINT, 0.0)

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class MixtureDensity:
    """Weighted beta components plus (possibly noise-smeared) word atoms."""

    continuous_parts: Tuple[Tuple[float, BetaDensity], ...] = ()
    smeared_atoms: Tuple[Tuple[float, float, NoiseKernel], ...] = ()

    def __post_init__(self):
        cont = tuple((float(w), d) for w, d in self.continuous_parts)
        atoms = tuple((float(w), float(c), k) for w, c, k in self.smeared_atoms)
        object.__setattr__(self, "continuous_parts", cont)
        object.__setattr__(self, "smeared_atoms", atoms)
        total = 0.0
        for w, d in cont:
            if w < 0:
                raise ValueError("negative mixture weight")
            if not isinstance(d, BetaDensity):
                raise TypeError("continuous parts must be BetaDensity")
            total += w
        for w, c, k in atoms:
            if w < 0:
                raise ValueError("negative atom weight")
            if not 0.0 < c < 1.0:
                raise ValueError(f"atom center {c} not strictly inside (0, 1)")
            if w > _WEIGHT_TOL:
                k.check_word(c)
            total += w
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {total}, expected 1")

    @classmethod
    def from_beta(cls, d: BetaDensity) -> "MixtureDensity":
        return cls(continuous_parts=((1.0, d),))

    def pdf(self, x):
        """Continuous density at x; point atoms contribute nothing here."""
        xa = np.asarray(x, dtype=float)
        if np.any(xa <= 0.0) or np.any(xa >= 1.0):
            raise DomainError("pdf evaluation requires x strictly inside (0, 1)")
        out = np.zeros_like(xa)
        for w, d in self.continuous_parts:
            out = out + w * d.pdf(xa)
        for w, c, k in self.smeared_atoms:
            out = out + w * k.pdf(xa, c)
        if np.isscalar(x) or np.ndim(x) == 0:
            return float(out)
        return out

    def partial_moments(self, a: float, b: float) -> Tuple[float, float, float]:
        if not (0.0 <= a < b <= 1.0):
            raise ValueError(f"need 0 <= a < b <= 1, got ({a}, {b})")
        m0 = m1 = m2 = 0.0
        for w, d in self.continuous_parts:
            p0, p1, p2 = d.partial_moments(a, b)
            m0 += w * p0
            m1 += w * p1
            m2 += w * p2
        for w, c, k in self.smeared_atoms:
            p0, p1, p2 = k.partial_moments(a, b, c)
            m0 += w * p0
            m1 += w * p1
            m2 += w * p2
        return m0, m1, m2

    def mass_in(self, a: float, b: float) -> float:
        return self.partial_moments(a, b)[0]

    def cell_centroid(self, a: float, b: float) -> float:
        m0, m1, _ = self.partial_moments(a, b)
        if m0 < EMPTY_CELL_MASS:
            raise EmptyCellError(f"cell ({a}, {b}] carries mass {m0:.3g}")
        return min(max(m1 / m0, a), b)

    def quantile(self, p: float, tol: float = 1e-13) -> float:
        """Smallest x with mass_in(0, x) >= p, by bisection."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("quantile level must be in [0, 1]")
        lo, hi = 0.0, 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.mass_in(0.0, mid) >= p:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def is_purely_continuous(self) -> bool:
        return all(w <= _WEIGHT_TOL for w, _, _ in self.smeared_atoms)


Density = Union[BetaDensity, MixtureDensity]


def as_mixture(d: Density) -> MixtureDensity:
    if isinstance(d, MixtureDensity):
        return d
    if isinstance(d, BetaDensity):
        return MixtureDensity.from_beta(d)
    raise TypeError(f"not a density: {d!r}")


def eval_pdf(d: Density, x) -> float:
    """Continuous density value at x (atoms excluded; query them via mass_in)."""
    return as_mixture(d).pdf(x)


def mass_in(d: Density, a: float, b: float) -> float:
    """Probability mass of the half-open interval (a, b]."""
    return as_mixture(d).mass_in(a, b)


def cell_centroid(d: Density, a: float, b: float) -> float:
    """Conditional mean E[X | X in (a, b]]."""
    return as_mixture(d).cell_centroid(a, b)


def check_semi_elasticity(d: Density, grid_size: int = 2001):
    """Whether d/dx log pdf is non-increasing on a uniform interior grid.

    Returns (ok, first_violation_x). The slope comparison allows a tiny
    amount of finite-difference noise.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    mix = as_mixture(d)
    x = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    p = np.asarray(mix.pdf(x))
    if np.any(p <= 0.0):
        bad = float(x[np.argmax(p <= 0.0)])
        raise DomainError(f"pdf vanishes at x={bad:.6g}; semi-elasticity undefined")
    slope = np.diff(np.log(p)) / np.diff(x)
    rises = np.nonzero(np.diff(slope) > 1e-9)[0]
    if rises.size == 0:
        return True, None
    return False, float(x[rises[0] + 1])


def hellinger_beta(p: BetaDensity, q: BetaDensity) -> float:
    """Beta-pair dissimilarity 1 - B((a1+a2)/2, (b1+b2)/2) / sqrt(B(a1,b1) B(a2,b2)).

    This is one minus the Bhattacharyya coefficient, i.e. the squared
    Hellinger distance under the textbook convention; we keep this form
    because it is the quantity the downstream similarity analysis plots.
    """
    a1, b1 = p.alpha, p.beta_param
    a2, b2 = q.alpha, q.beta_param
    log_bc = special.betaln((a1 + a2) / 2.0, (b1 + b2) / 2.0) - 0.5 * (
        special.betaln(a1, b1) + special.betaln(a2, b2)
    )
    return float(1.0 - math.exp(log_bc))
