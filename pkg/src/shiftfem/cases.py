"""Registry of exact-solution benchmark cases on the curved domains.

All cases use homogeneous Dirichlet data (the exact solution vanishes on
the boundary surface).  `u` and `f` are analytic on a neighborhood of the
domain, so they can be evaluated at any quadrature point of the
straight-edged mesh.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshgen import Mesh, generate_octant_mesh, generate_torus_sector_mesh
from .surfaces import Ellipsoid, Sphere, Surface, Torus


@dataclass
class ExactCase:
    name: str
    surface: Surface
    u: callable
    grad_u: callable
    f: callable
    g: callable
    mesh: callable  # refinement parameter -> Mesh
    h_of_param: callable  # reference mesh size 1/J or pi/(8I)
    convex: bool
    default_params: tuple


def _zero(p):
    return 0.0


def _quadratic_ellipsoid():
    a, b = 0.6, 0.8
    surf = Ellipsoid(np.array([a, b, 1.0]))
    const_f = 2.0 * (a**-2 + b**-2 + 1.0)

    def p_form(p):
        x, y, z = p
        return (x / a) ** 2 + (y / b) ** 2 + z**2

    def u(p):
        return 1.0 - p_form(p)

    def grad_u(p):
        x, y, z = p
        return np.array([-2.0 * x / a**2, -2.0 * y / b**2, -2.0 * z])

    return ExactCase(
        name="quadratic-ellipsoid",
        surface=surf,
        u=u,
        grad_u=grad_u,
        f=lambda p: const_f,
        g=_zero,
        mesh=lambda J: generate_octant_mesh(J, (a, b, 1.0)),
        h_of_param=lambda J: 1.0 / J,
        convex=True,
        default_params=(2, 4),
    )


def _tp1_sphere():
    surf = Sphere(np.zeros(3), 1.0)

    def u(p):
        r2 = float(p @ p)
        return r2 - r2 * r2

    def grad_u(p):
        r2 = float(p @ p)
        return (2.0 - 4.0 * r2) * np.asarray(p, dtype=float)

    def f(p):
        r2 = float(p @ p)
        return 20.0 * r2 - 6.0

    return ExactCase(
        name="tp1-sphere",
        surface=surf,
        u=u,
        grad_u=grad_u,
        f=f,
        g=_zero,
        mesh=lambda J: generate_octant_mesh(J, (1.0, 1.0, 1.0)),
        h_of_param=lambda J: 1.0 / J,
        convex=True,
        default_params=(4, 8, 16),
    )


def _tp2_ellipsoid():
    a, b = 0.6, 0.8
    surf = Ellipsoid(np.array([a, b, 1.0]))
    lap = -2.0 * (a**-2 + b**-2 + 1.0)  # Laplacian of both factors

    def A(p):
        x, y, z = p
        return 1.0 - (x / a) ** 2 - (y / b) ** 2 - z**2

    def B(p):
        x, y, z = p
        return 1.0 - (x / b) ** 2 - (y / a) ** 2 - z**2

    def gA(p):
        x, y, z = p
        return np.array([-2.0 * x / a**2, -2.0 * y / b**2, -2.0 * z])

    def gB(p):
        x, y, z = p
        return np.array([-2.0 * x / b**2, -2.0 * y / a**2, -2.0 * z])

    def u(p):
        return A(p) * B(p)

    def grad_u(p):
        return B(p) * gA(p) + A(p) * gB(p)

    def f(p):
        return -(A(p) * lap + B(p) * lap + 2.0 * float(gA(p) @ gB(p)))

    return ExactCase(
        name="tp2-ellipsoid",
        surface=surf,
        u=u,
        grad_u=grad_u,
        f=f,
        g=_zero,
        mesh=lambda J: generate_octant_mesh(J, (a, b, 1.0)),
        h_of_param=lambda J: 1.0 / J,
        convex=True,
        default_params=(2, 4, 8),
    )


def _tp3_torus():
    R, r = 5.0 / 6.0, 1.0 / 6.0
    surf = Torus(R, r)

    def u(p):
        x, y, z = p
        rho = np.hypot(x, y)
        return r * r - z * z - (R - rho) ** 2

    def grad_u(p):
        x, y, z = p
        rho = np.hypot(x, y)
        fac = 2.0 * (R - rho) / rho
        return np.array([fac * x, fac * y, -2.0 * z])

    def f(p):
        x, y, _z = p
        rho = np.hypot(x, y)
        return 6.0 - 2.0 * R / rho

    return ExactCase(
        name="tp3-torus",
        surface=surf,
        u=u,
        grad_u=grad_u,
        f=f,
        g=_zero,
        mesh=lambda I: generate_torus_sector_mesh(I, R, r),
        h_of_param=lambda I: np.pi / (8.0 * I),
        convex=False,
        default_params=(2, 4, 8),
    )


def case_registry():
    cases = [_quadratic_ellipsoid(), _tp1_sphere(), _tp2_ellipsoid(), _tp3_torus()]
    return {c.name: c for c in cases}


def get_case(name: str) -> ExactCase:
    reg = case_registry()
    if name not in reg:
        raise KeyError(
            "unknown case %r (available: %s)" % (name, ", ".join(sorted(reg)))
        )
    return reg[name]
