"""Conserved functionals, the arctan-exp cutoff family, and localized versions.

Two mass conventions coexist on purpose: the conserved mass is (1/2) int u^2
while the localized M_j drops the 1/2.  Both are kept exactly as defined;
linear combinations (Lyapunov and weakened functionals) use the localized
convention throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, integrate, spectral_derivative
from .profiles import OrderedConfiguration


def mass(u: Field) -> float:
    """Conserved L^2 mass (1/2) int u^2."""
    return 0.5 * integrate(u.grid, u.values**2)


def energy(u: Field) -> float:
    """Conserved energy int (1/2 u_x^2 - 1/4 u^4)."""
    ux = spectral_derivative(u, 1).values
    return integrate(u.grid, 0.5 * ux**2 - 0.25 * u.values**4)


def second_energy(u: Field) -> float:
    """Conserved second energy int (1/2 u_xx^2 - 5/2 u^2 u_x^2 + 1/4 u^6)."""
    ux = spectral_derivative(u, 1).values
    uxx = spectral_derivative(u, 2).values
    v = u.values
    return integrate(u.grid, 0.5 * uxx**2 - 2.5 * v**2 * ux**2 + 0.25 * v**6)


def psi(sigma: float, x):
    """Cutoff shape (2/pi) arctan(exp(-sqrt(sigma) x / 2)); 1 at -inf, 0 at +inf."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (2.0 / np.pi) * np.arctan(np.exp(-0.5 * np.sqrt(sigma) * np.asarray(x, dtype=float)))


def psi_prime(sigma: float, x):
    """Analytic derivative -(sqrt(sigma)/(2 pi)) sech(sqrt(sigma) x / 2)."""
    rs = np.sqrt(sigma)
    return -(rs / (2.0 * np.pi)) / np.cosh(0.5 * rs * np.asarray(x, dtype=float))


def psi_second(sigma: float, x):
    """Analytic second derivative (sigma/(4 pi)) sech(.) tanh(.)."""
    rs = np.sqrt(sigma)
    z = 0.5 * rs * np.asarray(x, dtype=float)
    return (sigma / (4.0 * np.pi)) * np.tanh(z) / np.cosh(z)


def cutoff_eval(sigma: float, m: float, t: float, x):
    """Moving weight Psi(x - m t)."""
    return psi(sigma, np.asarray(x, dtype=float) - m * t)


def derivative_inequality_holds(first, second, sigma: float) -> bool:
    """Check |w''| <= (sqrt(sigma)/2)|w'| samplewise for given derivative samples."""
    return bool(np.all(np.abs(second) <= 0.5 * np.sqrt(sigma) * np.abs(first)))


def cutoff_derivative_inequality(sigma: float, g: Grid) -> bool:
    """The analytic cutoff satisfies |Psi''| <= (sqrt(sigma)/2)|Psi'| at every node."""
    x = g.x
    return derivative_inequality_holds(psi_prime(sigma, x), psi_second(sigma, x), sigma)


@dataclass(frozen=True)
class CutoffFamily:
    """Cutoff shape parameter, the J-1 weight speeds, and their separation."""

    sigma: float
    speeds: tuple[float, ...]
    J: int
    tau0: float

    def weight(self, j: int, t: float, x) -> np.ndarray:
        """Phi_j(t, x); j is 1-based, Phi_J is identically 1."""
        self._check_index(j)
        x = np.asarray(x, dtype=float)
        if j == self.J:
            return np.ones_like(x)
        return cutoff_eval(self.sigma, self.speeds[j - 1], t, x)

    def weight_x(self, j: int, t: float, x) -> np.ndarray:
        """Spatial derivative of Phi_j (zero for j = J)."""
        self._check_index(j)
        x = np.asarray(x, dtype=float)
        if j == self.J:
            return np.zeros_like(x)
        return psi_prime(self.sigma, x - self.speeds[j - 1] * t)

    def _check_index(self, j: int):
        if not 1 <= j <= self.J:
            raise IndexError(f"j must be in 1..{self.J}, got {j}")


def make_cutoff_family(
    cfg: OrderedConfiguration, speeds, sigma: float
) -> CutoffFamily:
    """Validate speeds against the ordered velocities and compute tau0."""
    speeds = tuple(float(m) for m in speeds)
    v = cfg.velocities
    if len(speeds) != cfg.J - 1:
        raise ValueError(f"expected {cfg.J - 1} speeds, got {len(speeds)}")
    for j, m in enumerate(speeds, start=1):
        if not (v[j - 1] < m < v[j]):
            raise ValueError(
                f"speed m_{j}={m} must lie strictly between v_{j}={v[j - 1]} "
                f"and v_{j + 1}={v[j]}"
            )
        if m <= 0:
            raise ValueError(f"cutoff speeds must be positive, got m_{j}={m}")
    if speeds:
        tau0 = min(abs(vv - m) for vv in v for m in speeds)
    else:
        tau0 = np.inf
    return CutoffFamily(sigma=float(sigma), speeds=speeds, J=cfg.J, tau0=tau0)


@dataclass(frozen=True)
class LocalizedTriple:
    Mj: float
    Ej: float
    Fj: float
    j: int
    t: float

    def __post_init__(self):
        if self.Mj < 0:
            raise ValueError("localized mass must be nonnegative")


def localized_triple(u: Field, fam: CutoffFamily, j: int, t: float) -> LocalizedTriple:
    """Weighted integrals M_j = int u^2 Phi_j, E_j, F_j (localized convention)."""
    g = u.grid
    phi = fam.weight(j, t, g.x)
    v = u.values
    ux = spectral_derivative(u, 1).values
    uxx = spectral_derivative(u, 2).values
    Mj = integrate(g, v**2 * phi)
    Ej = integrate(g, (0.5 * ux**2 - 0.25 * v**4) * phi)
    Fj = integrate(g, (0.5 * uxx**2 - 2.5 * v**2 * ux**2 + 0.25 * v**6) * phi)
    return LocalizedTriple(Mj=Mj, Ej=Ej, Fj=Fj, j=j, t=t)
