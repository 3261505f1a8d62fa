"""Material and penalty functions.

Every scalar function of the stored energy and of the decoupling penalty lives
here. Functions accept scalars or numpy arrays and return ``(value, derivative)``
pairs where a derivative is meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InfeasibleError(ValueError):
    """Raised when an energy is evaluated outside its domain (e.g. det <= 0)."""


@dataclass(frozen=True)
class MaterialModel:
    """Ogden-type distortional part plus a power-law compressibility term.

    ``Phi(v1, v2, v3) = mu * (v1**p + v2**p + v3**p)`` and
    ``h(d) = c1 * d**gamma + c2 * d**(-delta)``.
    """

    mu: float = 1.0
    p: float = 2.0
    c1: float = 1.0
    c2: float = 2.0
    gamma: float = 2.0
    delta: float = 2.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not (1.0 <= self.p < 3.0):
            raise ValueError(f"p must lie in [1, 3), got {self.p}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.gamma <= 1:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")

    @property
    def d0(self) -> float:
        return d0_of(self)

    @classmethod
    def stress_free(cls, mu=1.0, p=2.0, c1=1.0, gamma=2.0, delta=2.0):
        """Model whose reference configuration is stress free."""
        return cls(mu=mu, p=p, c1=c1, c2=stress_free_c2(mu, p, gamma, delta, c1),
                   gamma=gamma, delta=delta)


def radial_model() -> MaterialModel:
    """The radial benchmark material (mu=c1=1, p=gamma=delta=2, c2=2)."""
    return MaterialModel.stress_free()


def fluid_model() -> MaterialModel:
    """Elastic fluid: no distortional energy, h(d) = d**2 + d**-2."""
    return MaterialModel(mu=0.0, p=2.0, c1=1.0, c2=1.0, gamma=2.0, delta=2.0)


@dataclass(frozen=True)
class PenaltyModel:
    """Parameters of the phase-field decoupling penalty.

    ``K`` defaults to the normalizer that makes ``max phi_tau = 1`` on
    ``[0, tau]``; ``q`` defaults to the conjugate exponent of ``alpha``.
    """

    eps: float
    tau: float = 3.0
    alpha: float = 2.0
    q: float | None = None
    K: float | None = None
    M: float = 1.0e4

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")
        if self.q is None:
            object.__setattr__(self, "q", self.alpha / (self.alpha - 1.0))
        if abs(1.0 / self.alpha + 1.0 / self.q - 1.0) > 1e-12:
            raise ValueError(f"alpha={self.alpha} and q={self.q} are not conjugate")
        if self.K is None:
            object.__setattr__(self, "K", k_normalizer(self.tau))

    @classmethod
    def from_eps2(cls, eps2: float, **kw) -> "PenaltyModel":
        if not eps2 > 0:
            raise ValueError(f"eps^2 must be positive, got {eps2}")
        return cls(eps=float(np.sqrt(eps2)), **kw)

    @property
    def eps2(self) -> float:
        return self.eps ** 2

    @property
    def grad_coef(self) -> float:
        """Coefficient ``eps**alpha / alpha`` of the gradient term."""
        return self.eps ** self.alpha / self.alpha

    @property
    def phi_coef(self) -> float:
        """Coefficient ``1 / (q eps**q)`` of the phase penalty."""
        return 1.0 / (self.q * self.eps ** self.q)


def h_eval(d, model: MaterialModel):
    """Compressibility energy ``h`` and its derivative.

    Raises InfeasibleError if any ``d <= 0``.
    """
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise InfeasibleError("h evaluated at a nonpositive determinant")
    c1, c2, g, dl = model.c1, model.c2, model.gamma, model.delta
    dg = d ** g
    dm = d ** (-dl)
    value = c1 * dg + c2 * dm
    deriv = (g * c1 * dg - dl * c2 * dm) / d
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def h_second(d, model: MaterialModel):
    """Second derivative of ``h``."""
    d = np.asarray(d, dtype=float)
    c1, c2, g, dl = model.c1, model.c2, model.gamma, model.delta
    return g * (g - 1) * c1 * d ** (g - 2) + dl * (dl + 1) * c2 * d ** (-dl - 2)


def d0_of(model: MaterialModel) -> float:
    """Stress-free determinant, the unique minimizer of ``h``."""
    return float((model.delta * model.c2 / (model.gamma * model.c1))
                 ** (1.0 / (model.gamma + model.delta)))


def stress_free_c2(mu, p, gamma, delta, c1) -> float:
    """``c2`` making the identity a stress-free state: ``(p mu + gamma c1) / delta``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return (p * mu + gamma * c1) / delta


def k_normalizer(tau: float) -> float:
    """Return ``K`` such that ``max_{[0,tau]} K v^2 (v - tau)^2 = 1``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return 16.0 / tau ** 4


def phi_tau_eval(v, pen: PenaltyModel, extended: bool = False):
    """Double-well penalty ``phi_tau`` and its derivative.

    On ``[0, tau]`` the value is ``K v^2 (v - tau)^2``; it vanishes for
    ``v > tau``. For ``v < 0`` it is zero, or ``M v^2`` when ``extended``.
    """
    v = np.asarray(v, dtype=float)
    tau, K = pen.tau, pen.K
    inside = (v >= 0) & (v <= tau)
    w = v * (v - tau)
    value = np.where(inside, K * w * w, 0.0)
    deriv = np.where(inside, 2.0 * K * w * (2.0 * v - tau), 0.0)
    if extended:
        neg = v < 0
        value = np.where(neg, pen.M * v * v, value)
        deriv = np.where(neg, 2.0 * pen.M * v, deriv)
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def phi_tau_second(v, pen: PenaltyModel, extended: bool = False):
    """Second derivative of ``phi_tau`` (piecewise; zero outside the wells)."""
    v = np.asarray(v, dtype=float)
    tau, K = pen.tau, pen.K
    inside = (v >= 0) & (v <= tau)
    out = np.where(inside, 2.0 * K * (6.0 * v * v - 6.0 * tau * v + tau * tau), 0.0)
    if extended:
        out = np.where(v < 0, 2.0 * pen.M, out)
    return out


def ogden_phi(v1, v2, v3, model: MaterialModel):
    """Distortional energy ``mu * sum(v_i**p)`` and its three partials."""
    v1, v2, v3 = (np.asarray(a, dtype=float) for a in (v1, v2, v3))
    if np.any(~(v1 > 0)) or np.any(~(v2 > 0)) or np.any(~(v3 > 0)):
        raise InfeasibleError("principal stretches must be positive")
    mu, p = model.mu, model.p
    value = mu * (v1 ** p + v2 ** p + v3 ** p)
    partials = tuple(mu * p * a ** (p - 1) for a in (v1, v2, v3))
    if value.ndim == 0:
        return float(value), tuple(float(x) for x in partials)
    return value, partials


def ogden_second(v, model: MaterialModel):
    """Second derivative of one Ogden term ``mu v**p``."""
    v = np.asarray(v, dtype=float)
    return model.mu * model.p * (model.p - 1) * v ** (model.p - 2)


def H_tau(s: float, pen: PenaltyModel, panels: int = 2000) -> float:
    """``int_0^s phi_tau(t)**(1/q) dt`` by composite Simpson.

    Only used as a diagnostic of the interface cost constant.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    upper = min(s, pen.tau)
    if upper == 0:
        return 0.0
    n = panels + panels % 2
    t = np.linspace(0.0, upper, n + 1)
    f = phi_tau_eval(t, pen)[0] ** (1.0 / pen.q)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(upper / (3.0 * n) * np.dot(w, f))
