"""Catalog of the benchmark convection-diffusion problems used by the
experiments: manufactured boundary layers, the parabolic-layer square,
interior-layer data, the Hemker problem and the double-glazing vortex."""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import ProblemSpec


class UnknownProblemError(KeyError):
    pass


@dataclass
class NamedProblem:
    name: str
    builder: object                 # (eps, **options) -> ProblemSpec
    dimension: int = 2
    domain: str = "unit-square"
    exact: object = None            # (eps) -> u(point) callable
    exact_gradient: object = None   # (eps) -> grad u(point) callable
    default_eps: float = 1e-8
    notes: dict = field(default_factory=dict)

    def build(self, eps=None, **options):
        return self.builder(self.default_eps if eps is None else eps,
                            **options)


# ---------------------------------------------------------------------------
# 1D motivating problem


def fig1_problem(eps=1e-8):
    """b = f = 1, c = 0 on (0, 1); the SMS interval ends at 1 - sigma."""
    return {"eps": eps, "b": 1.0, "f": 1.0}


# ---------------------------------------------------------------------------
# manufactured solution with exponential outflow layers


def _ex1_parts(eps):
    def A(x):
        return x - math.exp(2.0 * (x - 1.0) / eps)

    def Ap(x):
        return 1.0 - (2.0 / eps) * math.exp(2.0 * (x - 1.0) / eps)

    def App(x):
        return -(4.0 / eps ** 2) * math.exp(2.0 * (x - 1.0) / eps)

    def B(y):
        return y * y - math.exp(3.0 * (y - 1.0) / eps)

    def Bp(y):
        return 2.0 * y - (3.0 / eps) * math.exp(3.0 * (y - 1.0) / eps)

    def Bpp(y):
        return 2.0 - (9.0 / eps ** 2) * math.exp(3.0 * (y - 1.0) / eps)

    return A, Ap, App, B, Bp, Bpp


def ex1_exact(eps):
    A, _, _, B, _, _ = _ex1_parts(eps)
    return lambda p: A(p[0]) * B(p[1])


def ex1_exact_gradient(eps):
    A, Ap, _, B, Bp, _ = _ex1_parts(eps)
    return lambda p: np.array([Ap(p[0]) * B(p[1]), A(p[0]) * Bp(p[1])])


def ex1_spec(eps):
    A, Ap, App, B, Bp, Bpp = _ex1_parts(eps)
    b = np.array([2.0, 3.0])

    def f(p):
        x, y = p
        return (-eps * (App(x) * B(y) + A(x) * Bpp(y))
                + 2.0 * Ap(x) * B(y) + 3.0 * A(x) * Bp(y))

    return ProblemSpec(eps=eps, b=b, f=f, g1=ex1_exact(eps))


# ---------------------------------------------------------------------------
# convective-derivative benchmark on the curved domain


def ex3_spec(eps):
    return ProblemSpec(eps=eps, b=np.array([2.0, 3.0]), f=1.0)


# ---------------------------------------------------------------------------
# parabolic layers


def ex4_spec(eps):
    return ProblemSpec(eps=eps, b=np.array([1.0, 0.0]), f=1.0)


# ---------------------------------------------------------------------------
# interior layer from a boundary-data discontinuity

EX5_WIND = np.array([math.cos(-math.pi / 3.0), math.sin(-math.pi / 3.0)])
EX5_ORIGIN = (0.0, 0.7)
EX5_LAYER_VALUE = 0.5   # mean of the one-sided boundary values 0 and 1


def ex5_boundary(p):
    """0 if x = 1 or y <= 0.7, 1 otherwise (stated precedence order)."""
    if p[0] >= 1.0 - 1e-12 or p[1] <= 0.7:
        return 0.0
    return 1.0


def ex5_spec(eps):
    return ProblemSpec(eps=eps, b=EX5_WIND, f=0.0, g1=ex5_boundary)


# ---------------------------------------------------------------------------
# Hemker problem: hot unit disc in a channel

HEMKER_DOMAIN = ((-3.0, -3.0), (9.0, 3.0))


def hemker_boundary(p, theta=0.0):
    """1 on the unit circle; 0 on x = -3 (and y = -3 for theta > 0)."""
    if abs(p[0] * p[0] + p[1] * p[1] - 1.0) < 1e-6:
        return 1.0
    return 0.0


def hemker_tag(p, theta=0.0):
    """Dirichlet on the circle and the inflow walls, Neumann elsewhere."""
    if abs(p[0] * p[0] + p[1] * p[1] - 1.0) < 1e-6:
        return "D"
    if abs(p[0] + 3.0) < 1e-9:
        return "D"
    if theta > 0.0 and abs(p[1] + 3.0) < 1e-9:
        return "D"
    return "N"


def ex6_spec(eps, theta=0.0):
    b = np.array([math.cos(theta), math.sin(theta)])
    return ProblemSpec(eps=eps, b=b, f=0.0,
                       g1=lambda p: hemker_boundary(p, theta))


def hemker_layer_origins(theta=0.0):
    """Tangency points of the wind direction on the unit circle, where
    the characteristic layers start (boundary value jumps 1 -> 0)."""
    s, c = math.sin(theta), math.cos(theta)
    return [(-s, c), (s, -c)]


# ---------------------------------------------------------------------------
# double-glazing vortex

GLAZING_DOMAIN = ((-1.0, -1.0), (1.0, 1.0))


def glazing_wind(p):
    x, y = p
    return np.array([y * (1.0 - x * x), -x * (1.0 - y * y)])


def glazing_boundary(p):
    """1 on the hot wall x = 1, 0 elsewhere, 0.5 at the shared corners."""
    if p[0] >= 1.0 - 1e-12:
        if abs(p[1]) >= 1.0 - 1e-12:
            return 0.5
        return 1.0
    return 0.0


def ex7_spec(eps):
    return ProblemSpec(eps=eps, b=glazing_wind, f=0.0, g1=glazing_boundary)


# ---------------------------------------------------------------------------

_CATALOG = {
    "fig1": NamedProblem("fig1", lambda eps: fig1_problem(eps),
                         dimension=1, domain="interval"),
    "ex1": NamedProblem("ex1", ex1_spec, exact=ex1_exact,
                        exact_gradient=ex1_exact_gradient,
                        default_eps=1e-4),
    "ex3": NamedProblem("ex3", ex3_spec, domain="trochoid",
                        default_eps=1e-4),
    "ex4": NamedProblem("ex4", ex4_spec),
    "ex5": NamedProblem("ex5", ex5_spec,
                        notes={"layer_origin": EX5_ORIGIN,
                               "layer_value": EX5_LAYER_VALUE}),
    "ex6": NamedProblem("ex6", ex6_spec, domain="hemker",
                        notes={"layer_value": EX5_LAYER_VALUE}),
    "ex7": NamedProblem("ex7", ex7_spec, domain="glazing",
                        default_eps=1e-4),
}


def catalog(name):
    try:
        return _CATALOG[name]
    except KeyError:
        raise UnknownProblemError("unknown problem %r (known: %s)"
                                  % (name, ", ".join(sorted(_CATALOG))))
