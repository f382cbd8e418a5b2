"""Parameter selection, Lyapunov/weakened functionals, monotonicity tracking,
interpolation and coefficient checks, and the discrete coercivity eigencheck.

Parameter defaults follow the midpoint rule: every quantity that only has to
satisfy an open condition is placed at the midpoint of its admissible
interval, which maximizes slack and is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import EigensolveFailure, EmptyAdmissibleInterval, HypothesisViolated
from .evolution import Trajectory
from .functionals import (
    CutoffFamily,
    localized_triple,
    make_cutoff_family,
    mass,
    energy,
    second_energy,
)
from .grid import (
    Field,
    Grid,
    derivative_matrix,
    integrate,
    make_field,
    spectral_derivative,
)
from .profiles import (
    OrderedConfiguration,
    WaveObject,
    eval_object,
    order_and_validate,
    shape_pair,
)
from .modulation import modulation_directions


@dataclass(frozen=True)
class LyapunovParams:
    """The scalar tuning constants and the cutoff family they produced."""

    nu1: float
    nu: float
    nu_prime: float
    nu2: float
    nu3: float
    shape_pairs: tuple[tuple[float, float], ...]
    fam: CutoffFamily

    def validate(self):
        """Re-verify every invariant independently of how the values were built."""
        a1, b1 = self.shape_pairs[0]
        if not 0 < self.nu1 < 1:
            raise ValueError(f"nu1={self.nu1} outside (0,1)")
        if (b1**2 - a1**2) + self.nu1 * (a1**2 + b1**2) <= 0:
            raise ValueError("nu1 does not satisfy the first-shape positivity")
        if abs(self.nu - (self.nu1 + (2.0 / 3.0) * (1 - self.nu1))) > 1e-14:
            raise ValueError("nu identity violated")
        if abs(self.nu_prime - (self.nu1 + (1 - self.nu1) / 3.0)) > 1e-14:
            raise ValueError("nu_prime identity violated")
        if abs(self.nu1 + self.nu2 + self.nu3 - self.nu_prime) > 1e-14:
            raise ValueError("nu1 + nu2 + nu3 must equal nu_prime")
        if self.nu2 <= 0 or self.nu3 <= 0:
            raise ValueError("nu2 and nu3 must be positive")
        if self.fam.speeds:
            m1 = self.fam.speeds[0]
            if m1 * (b1**2 - a1**2) <= 0.5 * (self.nu1 - 1) * (a1**2 + b1**2) ** 2:
                raise ValueError("m1 violates the quadratic tuning constraint")

    def shape(self, j: int) -> tuple[float, float]:
        return self.shape_pairs[j - 1]

    def default_omega(self) -> float:
        """Small slack weight for the mass-augmented monotonicity checks."""
        if not self.fam.speeds:
            return 1e-3 * min((a**2 + b**2) ** 2 for a, b in self.shape_pairs)
        return 1e-3 * min(
            (a**2 + b**2) ** 2 * m
            for (a, b), m in zip(self.shape_pairs, self.fam.speeds)
        )


def _sigma_cap_for_first_shape(a1: float, b1: float, nu1: float, nu2: float, nu3: float) -> float:
    """Largest sigma keeping the two sigma-dependent coefficient bounds nonnegative.

    Only binds when b1^2 - a1^2 < 0; both bounds follow from solving the
    coefficient inequalities for sigma.
    """
    d = b1**2 - a1**2
    if d >= 0:
        return np.inf
    r = a1**2 + b1**2
    cap2 = (2.0 * 3.0**0.25 * (1 - nu1) ** 0.25 * nu2**0.75 * r**1.5 / (3.0 * abs(d))) ** 2
    cap3 = 2.0 * nu3 * r**2 / abs(d)
    return min(cap2, cap3)


def select_parameters(
    cfg: OrderedConfiguration, sigma: float, override: bool = False
) -> LyapunovParams:
    """Choose nu's and cutoff speeds for an ordered configuration.

    nu1 sits at the midpoint of its admissible interval, nu2 = nu3 split
    the gap to nu_prime evenly, the cutoff speeds are interval midpoints,
    and sigma is shrunk when the first shape pair forces a smaller value.
    """
    if not cfg.positive_v2 and not override:
        raise HypothesisViolated(
            "second-smallest velocity is not positive; pass override=True for "
            "exploratory runs outside the uniqueness regime"
        )
    pairs = tuple(cfg.shape_pairs())
    a1, b1 = pairs[0]
    d1 = b1**2 - a1**2
    r1 = a1**2 + b1**2
    nu1_min = max(0.0, -d1 / r1)
    nu1 = 0.5 * (1.0 + nu1_min)
    nu = nu1 + (2.0 / 3.0) * (1.0 - nu1)
    nu_prime = nu1 + (1.0 - nu1) / 3.0
    nu2 = nu3 = 0.5 * (nu_prime - nu1)

    sigma_eff = float(sigma)
    cap = _sigma_cap_for_first_shape(a1, b1, nu1, nu2, nu3)
    if sigma_eff > 0.9 * cap:
        sigma_eff = 0.9 * cap

    v = cfg.velocities
    speeds = []
    if cfg.J >= 2:
        lo = max(0.0, v[0])
        hi = v[1]
        if d1 < 0:
            # the quadratic tuning constraint caps m1 from above
            hi = min(hi, 0.5 * (nu1 - 1.0) * r1**2 / d1)
        if not lo < hi:
            raise EmptyAdmissibleInterval(
                f"no admissible m1 in ({lo}, {hi}) for velocities {v}"
            )
        speeds.append(0.5 * (lo + hi))
        for j in range(2, cfg.J):
            speeds.append(0.5 * (v[j - 1] + v[j]))

    fam = make_cutoff_family(cfg, speeds, sigma_eff)
    params = LyapunovParams(
        nu1=nu1,
        nu=nu,
        nu_prime=nu_prime,
        nu2=nu2,
        nu3=nu3,
        shape_pairs=pairs,
        fam=fam,
    )
    params.validate()
    return params


def lyapunov_H(u: Field, j: int, p: LyapunovParams, t: float) -> float:
    """H_j = F_j + 2(b^2-a^2) E_j + (a^2+b^2)^2 M_j (localized convention)."""
    a, b = p.shape(j)
    trip = localized_triple(u, p.fam, j, t)
    return trip.Fj + 2.0 * (b**2 - a**2) * trip.Ej + (a**2 + b**2) ** 2 * trip.Mj


def weakened_F(u: Field, j: int, p: LyapunovParams, t: float, nu: float | None = None) -> float:
    """Weakened functional: same combination with the mass coefficient nu < 1."""
    a, b = p.shape(j)
    nu_val = p.nu if nu is None else nu
    trip = localized_triple(u, p.fam, j, t)
    return trip.Fj + 2.0 * (b**2 - a**2) * trip.Ej + nu_val * (a**2 + b**2) ** 2 * trip.Mj


def quadratic_form_H(
    w: Field,
    profile: Field,
    j: int,
    p: LyapunovParams,
    t: float,
) -> float:
    """Second-variation quadratic form of the Lyapunov functional at a profile.

    Integrand: [1/2 w_xx^2 - 5/2 w_x^2 P^2 + 5/2 w^2 P_x^2 + 5 w^2 P P_xx
    + 15/4 w^2 P^4] Phi_j + (b^2-a^2)[w_x^2 - 3 w^2 P^2] Phi_j
    + 1/2 (a^2+b^2)^2 w^2 Phi_j.
    """
    if w.grid is not profile.grid and w.grid != profile.grid:
        raise ValueError("w and profile must share a grid")
    g = w.grid
    a, b = p.shape(j)
    phi = p.fam.weight(j, t, g.x)
    wv = w.values
    wx = spectral_derivative(w, 1).values
    wxx = spectral_derivative(w, 2).values
    pv = profile.values
    px = spectral_derivative(profile, 1).values
    pxx = spectral_derivative(profile, 2).values
    core = (
        0.5 * wxx**2
        - 2.5 * wx**2 * pv**2
        + 2.5 * wv**2 * px**2
        + 5.0 * wv**2 * pv * pxx
        + 3.75 * wv**2 * pv**4
    )
    mid = (b**2 - a**2) * (wx**2 - 3.0 * wv**2 * pv**2)
    low = 0.5 * (a**2 + b**2) ** 2 * wv**2
    return integrate(g, (core + mid + low) * phi)


def _quadratic_form_matrix(
    profile_vals: np.ndarray, phi: np.ndarray, a: float, b: float, g: Grid
) -> np.ndarray:
    """Dense symmetric matrix of quadratic_form_H (no quadrature h factor)."""
    d1 = derivative_matrix(g, 1)
    d2 = derivative_matrix(g, 2)
    pv = profile_vals
    pf = make_field(g, pv)
    px = spectral_derivative(pf, 1).values
    pxx = spectral_derivative(pf, 2).values
    W = np.diag(phi)
    diag_terms = (
        2.5 * px**2 + 5.0 * pv * pxx + 3.75 * pv**4
    ) * phi - 3.0 * (b**2 - a**2) * pv**2 * phi + 0.5 * (a**2 + b**2) ** 2 * phi
    A = (
        0.5 * d2.T @ W @ d2
        - 2.5 * d1.T @ np.diag(pv**2 * phi) @ d1
        + (b**2 - a**2) * d1.T @ W @ d1
        + np.diag(diag_terms)
    )
    return 0.5 * (A + A.T)


@dataclass
class CoercivityResult:
    """Outcome of the discrete coercivity eigencheck."""

    mu: float  # largest certified penalty/coercivity constant (0 if none)
    lambda_min_raw: float  # smallest Rayleigh quotient of the bare form
    lambda_min_at_mu: float
    orthogonalized: bool
    n: int


def coercivity_check(
    obj: WaveObject,
    p: LyapunovParams,
    j: int,
    g: Grid,
    t: float = 0.0,
    impose_orthogonality: bool = True,
    mu_grid: np.ndarray | None = None,
) -> CoercivityResult:
    """Eigencheck of the localized quadratic form against the weighted H^2 form.

    Assembles the dense matrix of quadratic_form_H plus the rank-one penalty
    (1/mu)(int P w sqrt(Phi))^2, restricts to the discrete-L^2 complement of
    the object's modulation directions, and returns the largest mu for which
    the minimal generalized Rayleigh quotient (against int (w_xx^2 + w_x^2 +
    w^2) Phi) exceeds mu.
    """
    if g.n > 4096:
        raise ValueError("dense eigensolve limited to n <= 4096")
    a, b = shape_pair(obj)
    x = g.x
    phi = p.fam.weight(j, t, x)
    pv = eval_object(obj, t, x)
    h = g.h

    A = h * _quadratic_form_matrix(pv, phi, a, b, g)
    d1 = derivative_matrix(g, 1)
    d2 = derivative_matrix(g, 2)
    W = np.diag(phi)
    B = h * (d2.T @ W @ d2 + d1.T @ W @ d1 + W)
    B = 0.5 * (B + B.T)

    if impose_orthogonality:
        dirs = modulation_directions(obj, (), t, g)
        V = np.column_stack([d.values for d in dirs])
        basis = scipy.linalg.null_space(V.T)
    else:
        basis = np.eye(g.n)

    try:
        Ar = basis.T @ A @ basis
        Br = basis.T @ B @ basis
        lam_raw = float(scipy.linalg.eigh(Ar, Br, eigvals_only=True, subset_by_index=[0, 0])[0])
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolveFailure(str(exc)) from exc

    pen_vec = pv * np.sqrt(phi)
    pr = basis.T @ pen_vec
    if mu_grid is None:
        mu_grid = np.logspace(-4, 0.5, 46)

    mu_best = 0.0
    lam_best = lam_raw
    for mu_hat in np.sort(mu_grid):
        Apen = Ar + (h**2 / mu_hat) * np.outer(pr, pr)
        try:
            lam = float(
                scipy.linalg.eigh(Apen, Br, eigvals_only=True, subset_by_index=[0, 0])[0]
            )
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover
            raise EigensolveFailure(str(exc)) from exc
        if lam >= mu_hat:
            mu_best = mu_hat
            lam_best = lam
    return CoercivityResult(
        mu=mu_best,
        lambda_min_raw=lam_raw,
        lambda_min_at_mu=lam_best,
        orthogonalized=impose_orthogonality,
        n=g.n,
    )


@dataclass
class MonotonicityReport:
    """Almost-monotonicity audit of one functional along a trajectory."""

    j: int
    which: str
    times: list[float]
    values: list[float]
    worst_drop: float  # largest decrease in excess of the slack (0 = verified)
    slack_bound: float  # slack at the start of the window (largest allowed)
    varpi: float
    C: float
    budget: float


_WHICH = ("Mj", "Ej+omega*Mj", "Fj+omega*Mj", "weakened_F")


def monotonicity_report(
    traj: Trajectory,
    j: int,
    p: LyapunovParams,
    which: str,
    omega: float | None = None,
    varpi: float = 0.0,
    C: float = 0.0,
    budget: float = 1e-5,
) -> MonotonicityReport:
    """Record decreases of the selected functional beyond the decaying slack.

    The slack allowed between t1 < t2 is C exp(-2 varpi t1) + budget; the
    report never raises on violations.
    """
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}")
    if omega is None:
        omega = p.default_omega()
    a, b = p.shape(j)
    values = []
    for t, u in zip(traj.times, traj.states):
        trip = localized_triple(u, p.fam, j, t)
        if which == "Mj":
            val = trip.Mj
        elif which == "Ej+omega*Mj":
            val = trip.Ej + omega * trip.Mj
        elif which == "Fj+omega*Mj":
            val = trip.Fj + omega * trip.Mj
        else:
            val = (
                trip.Fj
                + 2.0 * (b**2 - a**2) * trip.Ej
                + p.nu * (a**2 + b**2) ** 2 * trip.Mj
            )
        values.append(float(val))

    vals = np.asarray(values)
    times = np.asarray(traj.times)
    worst = 0.0
    # running maximum makes the pairwise scan linear: the worst decrease from
    # any t1 < t2 is (max over t1 <= t2 of value - slack) - value(t2)
    best_so_far = -np.inf
    for i in range(len(vals)):
        slack = C * np.exp(-2.0 * varpi * times[i]) + budget
        best_so_far = max(best_so_far, vals[i] - slack)
        worst = max(worst, best_so_far - vals[i])
    return MonotonicityReport(
        j=j,
        which=which,
        times=list(traj.times),
        values=values,
        worst_drop=float(worst),
        slack_bound=float(C * np.exp(-2.0 * varpi * times[0]) + budget),
        varpi=varpi,
        C=C,
        budget=budget,
    )


def calibrate_slack(
    cfg: OrderedConfiguration, p: LyapunovParams, g: Grid, t0: float = 0.0
) -> tuple[float, float]:
    """Diagnostic (varpi, C) for the monotonicity slack.

    varpi is tied to the cutoff transition scale and the slowest profile
    decay; C scales with the total functional size of the profiles, damped
    by the initial separation measured in units of the speed gap.
    """
    tau0 = p.fam.tau0
    min_b = min(b for _, b in p.shape_pairs)
    if not np.isfinite(tau0):
        varpi = 0.25 * min_b
    else:
        varpi = 0.25 * tau0 * min(np.sqrt(p.fam.sigma), min_b)

    scale = 0.0
    for o in cfg.objects:
        u = make_field(g, eval_object(o, t0, g.x))
        scale += 2.0 * mass(u) + abs(energy(u)) + abs(second_energy(u))

    from .profiles import center

    centers = sorted(center(o, t0) for o in cfg.objects)
    if len(centers) > 1 and np.isfinite(tau0):
        d_min = min(b2 - a2 for a2, b2 in zip(centers, centers[1:]))
        t_sep = d_min / (2.0 * tau0)
    else:
        t_sep = 0.0
    C = scale * np.exp(-2.0 * varpi * t_sep)
    return float(varpi), float(C)


@dataclass
class InterpolationReport:
    X: float
    A: float
    eps: float
    holds_quadratic: bool  # X^2 <= A + eps X
    holds_linear: bool  # X <= eps + sqrt(A)
    ratio: float  # X^2 / (A + eps X), <= 1 when the bound holds


def interpolation_inequality_check(
    u: Field, fam: CutoffFamily, j: int, t: float = 0.0
) -> InterpolationReport:
    """Check X^2 <= A + eps X with the |Phi_jx|-weighted Sobolev quantities."""
    g = u.grid
    wx = np.abs(fam.weight_x(j, t, g.x))
    u1 = spectral_derivative(u, 1).values
    u2 = spectral_derivative(u, 2).values
    u3 = spectral_derivative(u, 3).values
    i1 = integrate(g, u1**2 * wx)
    i2 = integrate(g, u2**2 * wx)
    i3 = integrate(g, u3**2 * wx)
    X = np.sqrt(i2)
    A = np.sqrt(i1 * i3)
    eps = 0.5 * np.sqrt(fam.sigma) * np.sqrt(i1)
    denom = A + eps * X
    tol = 1e-12 * max(1.0, X**2)
    return InterpolationReport(
        X=float(X),
        A=float(A),
        eps=float(eps),
        holds_quadratic=bool(X**2 <= denom + tol),
        holds_linear=bool(X <= eps + np.sqrt(A) + tol),
        ratio=float(X**2 / denom) if denom > 0 else 0.0,
    )


@dataclass
class CoefficientReport:
    """The four scalar positivity checks behind the weakened-functional growth."""

    j: int
    sigma: float
    values: tuple[float, float, float, float]
    holds: tuple[bool, bool, bool, bool]

    @property
    def all_hold(self) -> bool:
        return all(self.holds)


def coefficient_positivity(p: LyapunovParams, j: int, sigma: float | None = None) -> CoefficientReport:
    """Evaluate the four coefficient inequalities for cutoff index j < J."""
    if not p.fam.speeds:
        raise ValueError("coefficient positivity needs at least one cutoff (J >= 2)")
    if not 1 <= j <= len(p.fam.speeds):
        raise IndexError(f"j must be in 1..{len(p.fam.speeds)}")
    s = p.fam.sigma if sigma is None else float(sigma)
    a, b = p.shape(j)
    d = b**2 - a**2
    r = a**2 + b**2
    m = p.fam.speeds[j - 1]
    c1 = 3.0 * d + 3.0 * p.nu1 * r
    c2 = 3.0 * d * np.sqrt(s) + 2.0 * 3.0**0.25 * (1 - p.nu1) ** 0.25 * p.nu2**0.75 * r**1.5
    c3 = 3.0 * d * s / 4.0 + 1.5 * p.nu3 * r**2
    c4 = 1.5 * p.nu * r**2 + m * d - 1.5 * p.nu_prime * r**2
    return CoefficientReport(
        j=j,
        sigma=s,
        values=(float(c1), float(c2), float(c3), float(c4)),
        holds=(c1 >= 0, c2 >= 0, c3 >= 0, c4 > 0),
    )
