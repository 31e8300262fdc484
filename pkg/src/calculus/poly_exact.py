"""
Exact calculus on the model space (R, exp(-V) dx).

There Gamma(f, g) = f'g', Lf = f'' - V'f', Gamma_2(f, g) = f''g'' + V''f'g'
and H[f; g, h] = f''g'h'. All operands are polynomials, so identities reduce
to vanishing coefficient vectors and only the inequalities need sampling.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from src.config import TOLERANCES, get_logger
from src.calculus.errors import CurvaturePremiseViolation, PremiseViolation, SizeMismatch
from src.calculus.polynomials import MultivariatePoly, guard
from src.calculus.reports import CheckReport, pointwise_report

logger = get_logger(__name__)

Interval = Tuple[float, float]


def model_gamma(f: Polynomial, g: Optional[Polynomial] = None) -> Polynomial:
    g = f if g is None else g
    return guard(f.deriv() * g.deriv())


def model_generator(V: Polynomial, f: Polynomial) -> Polynomial:
    return guard(f.deriv(2) - V.deriv() * f.deriv())


def model_gamma2(V: Polynomial, f: Polynomial, g: Optional[Polynomial] = None) -> Polynomial:
    g = f if g is None else g
    return guard(f.deriv(2) * g.deriv(2) + V.deriv(2) * f.deriv() * g.deriv())


def model_h(f: Polynomial, g: Polynomial, h: Polynomial) -> Polynomial:
    return guard(f.deriv(2) * g.deriv() * h.deriv())


def gamma2_by_definition(V: Polynomial, f: Polynomial, g: Polynomial) -> Polynomial:
    """1/2 (L Gamma(f,g) - Gamma(f, Lg) - Gamma(g, Lf)) without the closed form."""
    return guard(
        0.5
        * (
            model_generator(V, model_gamma(f, g))
            - model_gamma(f, model_generator(V, g))
            - model_gamma(g, model_generator(V, f))
        )
    )


def h_by_definition(f: Polynomial, g: Polynomial, h: Polynomial) -> Polynomial:
    """H[f; g, h] from its expression through iterated Gamma."""
    return guard(
        0.5
        * (
            model_gamma(g, model_gamma(f, h))
            + model_gamma(h, model_gamma(f, g))
            - model_gamma(f, model_gamma(g, h))
        )
    )


def identity_report(name: str, lhs: Polynomial, rhs: Polynomial, interval: Interval = (-1.0, 1.0)) -> CheckReport:
    """
    Report for the polynomial identity lhs = rhs.

    lhs of the report is the largest coefficient of the difference, compared
    against zero with a tolerance relative to the coefficient scale; the
    location is the sample point where the difference is largest.
    """
    diff = lhs - rhs
    residual = float(np.max(np.abs(diff.coef)))
    scale = max(1.0, float(np.max(np.abs(lhs.coef))), float(np.max(np.abs(rhs.coef))))
    xs = np.linspace(interval[0], interval[1], 101)
    worst = float(xs[int(np.argmax(np.abs(diff(xs))))])
    return CheckReport.from_sides(name, residual, 0.0, TOLERANCES["poly_coefficient"] * scale, worst_state=worst)


def _require_anchored(*phis: MultivariatePoly) -> None:
    for phi in phis:
        if not phi.vanishes_at_origin:
            raise PremiseViolation("composition polynomials must vanish at the origin")


def _compositions(phi: MultivariatePoly, fs: Sequence[Polynomial]):
    n = phi.nvars
    first = [phi.partial(i).compose(fs) for i in range(n)]
    second = [[phi.partial(i).partial(j).compose(fs) for j in range(n)] for i in range(n)]
    return first, second


def verify_bochner(V: Polynomial, f: Polynomial, g: Polynomial, interval: Interval = (-1.0, 1.0)) -> CheckReport:
    """Gamma_2 from its definition matches f''g'' + V''f'g'."""
    return identity_report("bochner", gamma2_by_definition(V, f, g), model_gamma2(V, f, g), interval)


def verify_h_expression(f: Polynomial, g: Polynomial, h: Polynomial, interval: Interval = (-1.0, 1.0)) -> CheckReport:
    """The iterated-Gamma expression of H reduces to f''g'h'."""
    return identity_report("h_expression", h_by_definition(f, g, h), model_h(f, g, h), interval)


def verify_calculus_rules(
    f_list: Sequence[Polynomial],
    V: Polynomial,
    phi: MultivariatePoly,
    psi: MultivariatePoly,
    interval: Interval = (-1.0, 1.0),
) -> List[CheckReport]:
    """
    Leibniz rule, chain rule, diffusion chain rule and product Laplacian.

    The Leibniz rule and product Laplacian use the first entries of
    f_list (cycled when fewer than three are given); phi and psi take all of
    them as arguments.

    Returns:
        One report per identity
    """
    fs = list(f_list)
    if not fs or phi.nvars != len(fs) or psi.nvars != len(fs):
        raise SizeMismatch(f"phi/psi take {phi.nvars}/{psi.nvars} arguments but {len(fs)} polynomials were given")
    _require_anchored(phi, psi)
    f, g, h = (fs[i % len(fs)] for i in range(3))
    n = len(fs)
    reports = []

    reports.append(
        identity_report("leibniz", model_gamma(f * g, h), f * model_gamma(g, h) + g * model_gamma(f, h), interval)
    )

    phi_f, psi_f = phi.compose(fs), psi.compose(fs)
    phi_1, phi_2 = _compositions(phi, fs)
    psi_1, _ = _compositions(psi, fs)
    chain = Polynomial([0.0])
    diffusion = Polynomial([0.0])
    for i in range(n):
        diffusion = diffusion + phi_1[i] * model_generator(V, fs[i])
        for j in range(n):
            gij = model_gamma(fs[i], fs[j])
            chain = chain + phi_1[i] * psi_1[j] * gij
            diffusion = diffusion + phi_2[i][j] * gij
    reports.append(identity_report("chain_rule", model_gamma(phi_f, psi_f), guard(chain), interval))
    reports.append(identity_report("diffusion_chain_rule", model_generator(V, phi_f), guard(diffusion), interval))

    product_rhs = f * model_generator(V, g) + g * model_generator(V, f) + 2.0 * model_gamma(f, g)
    reports.append(identity_report("product_laplacian", model_generator(V, guard(f * g)), guard(product_rhs), interval))
    return reports


def verify_fundamental_identity(
    f_list: Sequence[Polynomial],
    V: Polynomial,
    phi: MultivariatePoly,
    interval: Interval = (-1.0, 1.0),
) -> CheckReport:
    """
    Gamma_2(Phi(f)) = sum Phi_i Phi_j Gamma_2(f_i, f_j) + 2 sum Phi_i Phi_jk H[f_i; f_j, f_k]
    + sum Phi_ik Phi_jh Gamma(f_i, f_j) Gamma(f_k, f_h).
    """
    fs = list(f_list)
    if phi.nvars != len(fs):
        raise SizeMismatch(f"phi takes {phi.nvars} arguments but {len(fs)} polynomials were given")
    _require_anchored(phi)
    n = len(fs)
    d1, d2 = _compositions(phi, fs)
    gam = [[model_gamma(fs[i], fs[j]) for j in range(n)] for i in range(n)]
    rhs = Polynomial([0.0])
    for i in range(n):
        for j in range(n):
            rhs = rhs + d1[i] * d1[j] * model_gamma2(V, fs[i], fs[j])
            for k in range(n):
                rhs = rhs + 2.0 * d1[i] * d2[j][k] * model_h(fs[i], fs[j], fs[k])
                for l in range(n):
                    if np.any(d2[i][k].coef) and np.any(d2[j][l].coef):
                        rhs = rhs + d2[i][k] * d2[j][l] * gam[i][j] * gam[k][l]
    return identity_report("fundamental_identity", model_gamma2(V, phi.compose(fs)), guard(rhs), interval)


def certify_curvature(V: Polynomial, K: float, interval: Interval, n_dense: int) -> float:
    """
    Certify V'' >= K on the interval and return min(V'' - K).

    Samples n_dense points plus both endpoints and every real critical
    point of V'' inside the interval (roots of V''' via the companion matrix).

    Raises:
        CurvaturePremiseViolation: V'' < K somewhere on the interval
    """
    a, b = interval
    d = V.deriv(2) - K
    critical = d.deriv().roots() if d.degree() > 0 else np.array([])
    critical = np.real(critical[np.abs(np.imag(critical)) <= 1e-9])
    critical = critical[(critical >= a) & (critical <= b)]
    points = np.concatenate([np.linspace(a, b, n_dense), [a, b], critical])
    values = d(points)
    k = int(np.argmin(values))
    tolerance = TOLERANCES["pointwise"] * max(1.0, float(np.max(np.abs(d.coef))))
    if values[k] < -tolerance:
        raise CurvaturePremiseViolation(f"V'' - K = {values[k]:.6g} at x = {points[k]:.6g}")
    return float(values[k])


def verify_theorem_estimates(
    f: Polynomial,
    g: Polynomial,
    h: Polynomial,
    V: Polynomial,
    K: float,
    interval: Interval = (-1.0, 1.0),
    n_samples: int = 1001,
) -> List[CheckReport]:
    """
    Pointwise Hessian and Gamma(Gamma) estimates under V'' >= K.

    Checks |H[f;g,h]|^2 <= (Gamma_2(f) - K Gamma(f)) Gamma(g) Gamma(h),
    sqrt(Gamma(Gamma(f,g))) <= sqrt(Gamma_2(f) - K Gamma f) sqrt(Gamma g)
    + sqrt(Gamma_2(g) - K Gamma g) sqrt(Gamma f), and
    Gamma(Gamma(f)) <= 4 (Gamma_2(f) - K Gamma(f)) Gamma(f) at sample points,
    plus the exact identity H[f;g,h] + H[g;f,h] = Gamma(Gamma(f,g), h).
    """
    certify_curvature(V, K, interval, 10 * n_samples)
    xs = np.linspace(interval[0], interval[1], n_samples)

    def excess(p: Polynomial) -> np.ndarray:
        # Gamma_2(p) - K Gamma(p) = p''^2 + (V'' - K) p'^2 >= 0 under the premise
        return np.maximum(model_gamma2(V, p)(xs) - K * model_gamma(p)(xs), 0.0)

    gf, gg, gh = (np.maximum(model_gamma(p)(xs), 0.0) for p in (f, g, h))
    ef, eg = excess(f), excess(g)

    def report(name: str, lhs: np.ndarray, rhs: np.ndarray) -> CheckReport:
        scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
        return pointwise_report(name, lhs, rhs, TOLERANCES["pointwise"] * scale, locations=xs)

    reports = [
        report("hessian_bound", model_h(f, g, h)(xs) ** 2, ef * gg * gh),
        report(
            "gamma_of_mixed_gamma",
            np.sqrt(np.maximum(model_gamma(model_gamma(f, g))(xs), 0.0)),
            np.sqrt(ef * gg) + np.sqrt(eg * gf),
        ),
        report("gamma_of_gamma", model_gamma(model_gamma(f))(xs), 4.0 * ef * gf),
        identity_report(
            "hessian_symmetrisation",
            model_h(f, g, h) + model_h(g, f, h),
            model_gamma(model_gamma(f, g), h),
            interval,
        ),
    ]
    logger.debug(f"Theorem estimates at K={K}: worst slack {min(r.slack for r in reports):.3e}")
    return reports
