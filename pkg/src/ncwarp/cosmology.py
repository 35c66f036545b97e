"""Dust cosmology with the deformation constant acting as negative curvature.

The expanding branch of ``adot^2 = C/a + Theta^2`` is integrated as the
second-order system ``addot = -C / (2 a^2)``; the first-order constraint is
not imposed but checked after every accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from .errors import ConstraintViolationError, CosmologyParameterError

EIGHT_PI = 8 * math.pi


@dataclass(frozen=True)
class CosmologyParams:
    theta: float
    C: float
    a0: float
    t_span: tuple = (0.0, 10.0)
    rtol: float = 1e-12
    atol: float = 1e-14
    constraint_tol: float = 1e-8
    samples: int = 201

    def __post_init__(self):
        t0, t1 = self.t_span
        if not t1 > t0:
            raise CosmologyParameterError("t_span must be increasing")
        if self.a0 < 0:
            raise CosmologyParameterError("initial scale factor must be non-negative")
        if 0 < self.a0 < 1e-100:
            raise CosmologyParameterError("a0 this small underflows the density; use a0 = 0 for the singular start")
        if self.a0 == 0:
            if self.C <= 0:
                raise CosmologyParameterError("a0 = 0 needs C > 0 (the singular start is matter dominated)")
        elif self.C / self.a0 + self.theta**2 <= 0:
            raise CosmologyParameterError("C/a0 + Theta^2 must be positive for a real expanding start")
        if self.samples < 2:
            raise CosmologyParameterError("need at least two samples")

    @property
    def C_prime(self) -> float:
        return 3 * self.C / EIGHT_PI


@dataclass
class Trajectory:
    t: np.ndarray
    a: np.ndarray
    adot: np.ndarray
    rho: np.ndarray
    params: CosmologyParams
    step_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_constraint: float = 0.0

    @property
    def negative_density(self) -> bool:
        return bool(np.any(self.rho < 0))

    def rows(self):
        return zip(self.t, self.a, self.adot, self.rho)


def rho_of_a(a, theta: float, C_prime: float):
    """``rho a^3 = (3 / 8 pi) Theta^2 a + C'``."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise CosmologyParameterError("density needs a > 0")
    out = (3 / EIGHT_PI * theta**2 * a + C_prime) / a**3
    return float(out) if out.ndim == 0 else out


def constraint_residual(a, adot, theta: float, C: float):
    """``|adot^2 - C/a - Theta^2| / (C/a + Theta^2)``."""
    a = np.asarray(a, dtype=float)
    target = C / a + theta**2
    return np.abs(np.asarray(adot) ** 2 - target) / np.abs(target)


def _g(z: float) -> float:
    """``6 (sinh z - z) / z^3`` without cancellation; 1 at z = 0."""
    if abs(z) < 1e-2:
        z2 = z * z
        return 1 + z2 / 20 + z2 * z2 / 840 + z2**3 / 60480
    return 6 * (math.sinh(z) - z) / z**3


def _sinhc_half(z: float) -> float:
    """``sinh(z/2) / z``; 1/2 at z = 0."""
    return 0.5 if z == 0 else math.sinh(z / 2) / z


def _tanhc_half(z: float) -> float:
    """``tanh(z/2) / z``; 1/2 at z = 0."""
    return 0.5 if z == 0 else math.tanh(z / 2) / z


def exact_solution(t, theta: float, C: float, a0: float = 0.0):
    """Closed-form ``(a, adot)`` on the expanding branch.

    Used for the singular start and as a test oracle.  With ``a0 = 0`` the
    solution is the open-universe cycloid
    ``a = C/(2 Theta^2) (cosh eta - 1)``, ``t = C/(2 |Theta|^3) (sinh eta - eta)``.
    It is written in ``s = eta / |Theta|`` so that ``Theta -> 0`` passes
    smoothly into the Einstein-de Sitter law:
    ``t = (C/12) s^3 g(|Theta| s)``, ``a = C s^2 (sinh(z/2)/z)^2``.
    """
    t = float(t)
    th = abs(theta)
    if C == 0:
        return a0 + th * t, th
    if a0 != 0:
        raise CosmologyParameterError("closed form implemented for the singular start only")
    if t <= 0:
        return 0.0, math.inf

    def F(s):
        return C / 12 * s**3 * _g(th * s) - t

    # g >= 1, so the Einstein-de Sitter value bounds s from above
    hi = (12 * t / C) ** (1 / 3)
    s = hi if F(hi) <= 0 else brentq(F, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    z = th * s
    a = C * s * s * _sinhc_half(z) ** 2
    adot = 1 / (s * _tanhc_half(z))
    return a, adot


def _rhs(C):
    if C == 0:
        def f(_t, y):
            return np.array([y[1], 0.0])

        return f

    def f(_t, y):
        return np.array([y[1], -C / (2 * y[0] ** 2)])

    return f


def integrate(params: CosmologyParams) -> Trajectory:
    t0, t1 = params.t_span
    theta, C = params.theta, params.C
    t_eval = np.linspace(t0, t1, params.samples)

    if params.a0 == 0:
        # start a short time after the singularity from the closed form
        t_boot = t0 + min(1e-3 * (t1 - t0), 1e-2)
        a_start, v_start = exact_solution(t_boot - t0, theta, C)
    else:
        t_boot = t0
        a_start, v_start = params.a0, math.sqrt(C / params.a0 + theta**2)

    solver = DOP853(_rhs(C), t_boot, np.array([a_start, v_start]), t1, rtol=params.rtol, atol=params.atol)
    a_out = np.empty_like(t_eval)
    v_out = np.empty_like(t_eval)
    filled = t_eval < t_boot
    for k in np.nonzero(filled)[0]:
        a_out[k], v_out[k] = exact_solution(t_eval[k] - t0, theta, C)
    steps = [t_boot]
    worst = float(constraint_residual(a_start, v_start, theta, C))
    idx = int(np.searchsorted(t_eval, t_boot))
    if idx < len(t_eval) and t_eval[idx] == t_boot:
        a_out[idx], v_out[idx] = a_start, v_start
        idx += 1
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise ConstraintViolationError(f"integrator failed at t={solver.t:.6g}: {message}")
        a_now, v_now = solver.y
        if not (math.isfinite(a_now) and math.isfinite(v_now)):
            raise ConstraintViolationError(f"non-finite state at t={solver.t:.6g}")
        if a_now <= 0 or v_now <= 0:
            raise ConstraintViolationError(f"left the expanding branch at t={solver.t:.6g}")
        r = float(constraint_residual(a_now, v_now, theta, C))
        worst = max(worst, r)
        if r > params.constraint_tol:
            raise ConstraintViolationError(
                f"energy constraint drifted to {r:.3e} (> {params.constraint_tol:g}) at t={solver.t:.6g}"
            )
        steps.append(solver.t)
        if idx < len(t_eval) and t_eval[idx] <= solver.t:
            dense = solver.dense_output()
            while idx < len(t_eval) and t_eval[idx] <= solver.t:
                a_out[idx], v_out[idx] = dense(t_eval[idx])
                idx += 1
    # the singular start sample (a = 0) has infinite density
    positive = a_out > 0
    rho = np.full_like(a_out, np.inf)
    rho[positive] = rho_of_a(a_out[positive], theta, params.C_prime)
    sample_worst = float(np.max(constraint_residual(a_out[positive], v_out[positive], theta, C)))
    return Trajectory(t_eval, a_out, v_out, rho, params, np.array(steps), max(worst, sample_worst))


@dataclass(frozen=True)
class FriedmannResiduals:
    e3: float
    e4: float
    continuity: float
    constraint: float

    def as_dict(self) -> dict:
        return {"e3": self.e3, "e4": self.e4, "continuity": self.continuity, "constraint": self.constraint}


def friedmann_residuals(traj: Trajectory, theta: float | None = None) -> FriedmannResiduals:
    """Relative residuals of the two dust equations along a trajectory.

    ``addot`` comes from differentiating the constraint with the constant
    recovered from the samples themselves, ``C_eff = a (adot^2 - Theta^2)``,
    so a trajectory that violates the constraint shows up in every residual.
    """
    theta = traj.params.theta if theta is None else theta
    ok = traj.a > 0
    a, v, rho = traj.a[ok], traj.adot[ok], traj.rho[ok]
    lhs3 = 3 * v**2 / a**2
    e3 = float(np.max(np.abs(lhs3 - EIGHT_PI * rho) / lhs3))

    C_eff = a * (v**2 - theta**2)
    addot = -C_eff / (2 * a**2)
    lhs4 = 3 * addot / a
    rhs4 = -4 * math.pi * rho + 1.5 * theta**2 / a**2
    scale4 = 4 * math.pi * np.abs(rho) + 1.5 * theta**2 / a**2
    e4 = float(np.max(np.abs(lhs4 - rhs4) / scale4))

    # rho from the first equation; rho a^3 - (3/8pi) Theta^2 a must stay at C'
    rho3 = lhs3 / EIGHT_PI
    Q = rho3 * a**3 - 3 / EIGHT_PI * theta**2 * a
    scale_q = np.maximum(np.abs(Q), 3 / EIGHT_PI * theta**2 * a)
    continuity = float(np.max(np.abs(Q - traj.params.C_prime) / scale_q))
    constraint = float(np.max(constraint_residual(a, v, theta, traj.params.C)))
    return FriedmannResiduals(e3, e4, continuity, constraint)
