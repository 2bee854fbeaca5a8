"""Built-in vector fields for the command line, plus polynomial fields
declared in a config file.

A polynomial field lists, per state component, monomial terms
{"coeff": c, "x": [i1, ..., in], "u": [j1, ..., jp]} meaning
c * prod x_k^{i_k} * prod u_k^{j_k}; partials are formed by the power
rule, so the jacobians are exact.
"""

from __future__ import annotations

import math

import numpy as np

from .nonlinear import VectorField


def pendulum() -> VectorField:
    """Torque-driven pendulum theta'' + sin(theta) = u in first-order form
    (unit mass and gravity)."""

    def f(x, u):
        return np.array([x[1], -math.sin(x[0]) + u[0]])

    def fx(x, u):
        return np.array([[0.0, 1.0], [-math.cos(x[0]), 0.0]])

    def fu(x, u):
        return np.array([[0.0], [1.0]])

    return VectorField(state_dim=2, control_dim=1, f=f, fx=fx, fu=fu)


def double_integrator() -> VectorField:
    def f(x, u):
        return np.array([x[1], u[0]])

    def fx(x, u):
        return np.array([[0.0, 1.0], [0.0, 0.0]])

    def fu(x, u):
        return np.array([[0.0], [1.0]])

    return VectorField(state_dim=2, control_dim=1, f=f, fx=fx, fu=fu)


def polynomial_field(decl: dict) -> VectorField:
    n = int(decl["state_dim"])
    p = int(decl["control_dim"])
    rhs = decl["rhs"]
    if len(rhs) != n:
        raise ValueError(f"rhs must list {n} components, got {len(rhs)}")
    terms = []
    for comp in rhs:
        comp_terms = []
        for term in comp:
            coeff = float(term["coeff"])
            xpow = np.asarray(term.get("x", [0] * n), dtype=int)
            upow = np.asarray(term.get("u", [0] * p), dtype=int)
            if xpow.size != n or upow.size != p:
                raise ValueError("term powers must match state/control dims")
            if np.any(xpow < 0) or np.any(upow < 0):
                raise ValueError("powers must be nonnegative")
            comp_terms.append((coeff, xpow, upow))
        terms.append(comp_terms)

    def _mono(z, powers):
        return float(np.prod(np.power(z, powers)))

    def f(x, u):
        return np.array([
            sum(c * _mono(x, xp) * _mono(u, up) for c, xp, up in comp)
            for comp in terms])

    def _dmono(z, powers, k):
        # d/dz_k of prod z_i^{p_i}
        if powers[k] == 0:
            return 0.0
        lowered = powers.copy()
        lowered[k] -= 1
        return powers[k] * float(np.prod(np.power(z, lowered)))

    def fx(x, u):
        J = np.zeros((n, n))
        for i, comp in enumerate(terms):
            for c, xp, up in comp:
                uval = _mono(u, up)
                for k in range(n):
                    J[i, k] += c * uval * _dmono(x, xp, k)
        return J

    def fu(x, u):
        J = np.zeros((n, p))
        for i, comp in enumerate(terms):
            for c, xp, up in comp:
                xval = _mono(x, xp)
                for k in range(p):
                    J[i, k] += c * xval * _dmono(u, up, k)
        return J

    return VectorField(state_dim=n, control_dim=p, f=f, fx=fx, fu=fu)


# name -> (builder, default equilibrium state, default equilibrium control)
BUILTIN_FIELDS = {
    "pendulum": (pendulum, (math.pi, 0.0), (0.0,)),
    "double_integrator": (double_integrator, (0.0, 0.0), (0.0,)),
}


def get_field(name: str, config_fields: dict | None = None):
    """Resolve a field name to (VectorField, default_xeq, default_ueq).

    Config-declared polynomial fields have no default equilibrium; the
    caller must supply one.
    """
    if name in BUILTIN_FIELDS:
        builder, xeq, ueq = BUILTIN_FIELDS[name]
        return builder(), np.array(xeq), np.array(ueq)
    if config_fields and name in config_fields:
        return polynomial_field(config_fields[name]), None, None
    known = sorted(BUILTIN_FIELDS) + sorted(config_fields or ())
    raise KeyError(f"unknown vector field {name!r}; known fields: {known}")
