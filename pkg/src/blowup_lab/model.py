"""Model parameters, memory kernels and closed-form ODE ground truth.

The PDE is ``u_tt - Δu = u_t |u_t|^(p-1)`` on R^N.  Everything downstream
(kernel exponents, energy weights) is derived from a single
:class:`ModelParams` instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

# exp() overflows a double just above 709.78
MAX_EXPONENT = 700.0

INTEGER_BRANCH = "integer"
REGULARITY_BRANCH = "regularity"


class AdmissibilityError(ValueError):
    """Raised when (N, p, alpha) does not satisfy the model hypotheses."""


def alpha_threshold(beta: float) -> float:
    return max(beta * (beta + 1.0) / 2.0, 1.0 + 2.0 * beta, 2.0)


@dataclass(frozen=True)
class ModelParams:
    N: int
    p: float
    alpha: float
    branch: str

    @property
    def beta(self) -> float:
        return 1.0 / (self.p - 1.0)

    @property
    def reduced_smoothness(self) -> bool:
        """True when ``v|v|^(p-1)`` is not C^2 at v = 0 (real 1 < p < 2)."""
        return self.p < 2.0 and not float(self.p).is_integer()


def admissibility_branch(N: int, p: float) -> Optional[str]:
    """Return which hypothesis branch (N, p) satisfies, or None."""
    if N < 1 or not p > 1.0:
        return None
    if float(p).is_integer():
        if N <= 2 or p < N / (N - 2.0):
            return INTEGER_BRANCH
    if N <= 3:
        return REGULARITY_BRANCH
    return None


def make_params(N: int, p: float, alpha_override: Optional[float] = None) -> ModelParams:
    """Validate (N, p) and pick the energy weight exponent alpha.

    alpha defaults to the admissibility threshold plus one.
    """
    if int(N) != N or N < 1:
        raise AdmissibilityError(f"N must be a positive integer, got {N!r}")
    if not math.isfinite(p) or p <= 1.0:
        raise AdmissibilityError(f"p > 1 required, got p={p!r}")
    N = int(N)
    p = float(p)
    branch = admissibility_branch(N, p)
    if branch is None:
        raise AdmissibilityError(
            f"(N={N}, p={p}) satisfies neither the integer branch "
            f"(p integer, p < N/(N-2) for N >= 3) nor the regularity branch (N <= 3)"
        )
    beta = 1.0 / (p - 1.0)
    threshold = alpha_threshold(beta)
    if alpha_override is None:
        alpha = threshold + 1.0
    else:
        alpha = float(alpha_override)
        if not alpha > threshold:
            raise AdmissibilityError(
                f"alpha={alpha} must exceed max(beta(beta+1)/2, 1+2beta, 2) = {threshold}"
            )
    return ModelParams(N=N, p=p, alpha=alpha, branch=branch)


@dataclass(frozen=True)
class KernelValues:
    g: float
    g2: float
    h: float
    h2: float


def _guarded_exp(x: float) -> float:
    if not math.isfinite(x) or abs(x) > MAX_EXPONENT:
        raise OverflowError(f"kernel exponent {x} outside representable range")
    return math.exp(x)


def kernels(params: ModelParams, s: float) -> KernelValues:
    """g = e^{(β+1)s}, g2 = e^{(β-1)s} and their reciprocals h, h2."""
    beta = params.beta
    a = (beta + 1.0) * s
    b = (beta - 1.0) * s
    return KernelValues(
        g=_guarded_exp(a), g2=_guarded_exp(b), h=_guarded_exp(-a), h2=_guarded_exp(-b)
    )


def g(params: ModelParams, s: float) -> float:
    return _guarded_exp((params.beta + 1.0) * s)


def g2(params: ModelParams, s: float) -> float:
    return _guarded_exp((params.beta - 1.0) * s)


def h2(params: ModelParams, s: float) -> float:
    return _guarded_exp(-(params.beta - 1.0) * s)


def exp_integral(c: float, s0: float, s: float) -> float:
    """Closed form of ``∫_{s0}^{s} e^{c τ} dτ`` (c = 0 allowed)."""
    if c == 0.0:
        return s - s0
    return _guarded_exp(c * s0) * math.expm1(c * (s - s0)) / c


def ode_exact(p: float, T: float, t: float) -> float:
    """Positive solution of v' = v^p blowing up at T."""
    if not t < T:
        raise ValueError(f"t={t} must be strictly before the blow-up time T={T}")
    return ((p - 1.0) * (T - t)) ** (-1.0 / (p - 1.0))


def ode_steady_theta(p: float) -> float:
    """Constant similarity profile beta^beta of the ODE blow-up."""
    beta = 1.0 / (p - 1.0)
    return beta**beta
