"""Built-in pair interactions and external potentials.

Derivative data is supplied analytically, never by runtime differencing, so
the quadratic-profile equation and the correction sources get exact
coefficients.  Pair interactions are even functions of the separation and
only accept r >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PairPotential",
    "ExternalPotential",
    "builtin_pair",
    "builtin_external",
    "PAIR_NAMES",
    "EXTERNAL_NAMES",
]

Array = np.ndarray
PAIR_NAMES = ("zero", "cosine", "gaussian", "quadratic")
EXTERNAL_NAMES = ("zero", "harmonic", "cosine", "cubic_window")

# width of the smooth cutoff in the cubic_window external potential
_WINDOW_SCALE = 4.0


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Even two-body interaction with its derivatives at the origin."""

    name: str
    value_at_0: float
    second_deriv_at_0: float
    fourth_deriv_at_0: float
    _fn: Callable[[Array], Array]

    def __call__(self, r):
        """Evaluate at separations r >= 0."""
        return self._fn(np.asarray(r, dtype=np.float64))

    def shifted(self, r):
        """phi(r) - phi(0), the combination entering mean-field kernels."""
        return self(r) - self.value_at_0


@dataclass(frozen=True, eq=False)
class ExternalPotential:
    """External potential U(x, t) with analytic x-derivatives up to order 4."""

    name: str
    value: Callable[[Array, float], Array]
    grad: Callable[[Array, float], Array]
    hess: Callable[[Array, float], Array]
    third: Callable[[Array, float], Array]
    fourth: Callable[[Array, float], Array]


def _require_params(name: str, params: Sequence[float], count: int) -> tuple:
    params = tuple(float(p) for p in params)
    if len(params) != count:
        raise ValueError(
            f"pair potential {name!r} takes {count} parameter(s), got {len(params)}"
        )
    return params


def builtin_pair(name: str, params: Sequence[float] = ()) -> PairPotential:
    """Named pair interactions: zero, cosine, gaussian, quadratic(c0, c2)
    with quadratic meaning phi(r) = c0 + c2 r^2 / 2."""
    if name == "zero":
        _require_params(name, params, 0)
        return PairPotential("zero", 0.0, 0.0, 0.0, lambda r: np.zeros_like(r))
    if name == "cosine":
        _require_params(name, params, 0)
        return PairPotential("cosine", 1.0, -1.0, 1.0, np.cos)
    if name == "gaussian":
        _require_params(name, params, 0)
        return PairPotential("gaussian", 1.0, -1.0, 3.0,
                             lambda r: np.exp(-0.5 * r * r))
    if name == "quadratic":
        c0, c2 = _require_params(name, params, 2)
        return PairPotential("quadratic", c0, c2, 0.0,
                             lambda r, c0=c0, c2=c2: c0 + 0.5 * c2 * r * r)
    raise ValueError(
        f"unknown pair potential {name!r}: valid names are {', '.join(PAIR_NAMES)}"
    )


def _one_optional(name: str, params: Sequence[float], default: float) -> float:
    params = tuple(float(p) for p in params)
    if len(params) > 1:
        raise ValueError(
            f"external potential {name!r} takes at most one parameter, got {len(params)}"
        )
    return params[0] if params else default


def builtin_external(name: str, params: Sequence[float] = ()) -> ExternalPotential:
    """Named external potentials: zero, harmonic(omega), cosine(A),
    cubic_window(A).  All built-ins are time independent; the time argument
    is part of the interface and ignored."""
    if name == "zero":
        if len(tuple(params)) != 0:
            raise ValueError("external potential 'zero' takes no parameters")
        zero = lambda x, t: np.zeros_like(np.asarray(x, dtype=np.float64))
        return ExternalPotential("zero", zero, zero, zero, zero, zero)

    if name == "harmonic":
        w = _one_optional(name, params, 1.0)
        w2 = w * w
        return ExternalPotential(
            "harmonic",
            value=lambda x, t: 0.5 * w2 * np.asarray(x, float) ** 2,
            grad=lambda x, t: w2 * np.asarray(x, float),
            hess=lambda x, t: w2 * np.ones_like(np.asarray(x, float)),
            third=lambda x, t: np.zeros_like(np.asarray(x, float)),
            fourth=lambda x, t: np.zeros_like(np.asarray(x, float)),
        )

    if name == "cosine":
        amp = _one_optional(name, params, 1.0)
        return ExternalPotential(
            "cosine",
            value=lambda x, t: amp * np.cos(x),
            grad=lambda x, t: -amp * np.sin(x),
            hess=lambda x, t: -amp * np.cos(x),
            third=lambda x, t: amp * np.sin(x),
            fourth=lambda x, t: amp * np.cos(x),
        )

    if name == "cubic_window":
        amp = _one_optional(name, params, 1.0)
        s2 = _WINDOW_SCALE ** 2

        def window(x):
            x = np.asarray(x, dtype=np.float64)
            return x, np.exp(-x * x / (2.0 * s2))

        # U = A x^3 g with g = exp(-x^2/(2 s^2)); derivatives expanded by hand
        def value(x, t):
            x, g = window(x)
            return amp * x ** 3 * g

        def grad(x, t):
            x, g = window(x)
            return amp * g * (3.0 * x ** 2 - x ** 4 / s2)

        def hess(x, t):
            x, g = window(x)
            return amp * g * (6.0 * x - 7.0 * x ** 3 / s2 + x ** 5 / s2 ** 2)

        def third(x, t):
            x, g = window(x)
            return amp * g * (6.0 - 27.0 * x ** 2 / s2
                              + 12.0 * x ** 4 / s2 ** 2 - x ** 6 / s2 ** 3)

        def fourth(x, t):
            x, g = window(x)
            return amp * g * (-60.0 * x / s2 + 75.0 * x ** 3 / s2 ** 2
                              - 18.0 * x ** 5 / s2 ** 3 + x ** 7 / s2 ** 4)

        return ExternalPotential("cubic_window", value, grad, hess, third, fourth)

    raise ValueError(
        f"unknown external potential {name!r}: valid names are {', '.join(EXTERNAL_NAMES)}"
    )
