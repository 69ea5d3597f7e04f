"""Bismut Ricci form via the 1-form eta, and the derived endomorphisms.

The canonical computation path is rho_B = d_mu(eta) with

    eta_a = -i g^{kbar r} g(mu(Z_a, Z_r), Z_kbar)
            + i g^{kbar r} g(mu(Z_r, Z_kbar), Z_a),
    eta_bbar = conj(eta_b),

where g^{kbar r} is the inverse metric entry with barred row index.  The
first sum collapses to -i mu_{ar}^r independently of the metric.  The
evolution contract everywhere in this package is dg/dt = -(rho_B)^{1,1}
in coefficient form, with the sign anchored by the Heisenberg example
where the standard metric grows like sqrt(1 + t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotTwoStepError, ValidationError
from .hermitian_forms import (
    HermitianMetric,
    InvariantForm,
    big_bilinear,
    d_mu,
    form_inner,
    fundamental_form,
    require_integrable,
)
from .lie_core import LieBracket, center, nilpotency_step

# Pairing of the Bismut Ricci form against omega_0 under form_inner equals
# the Bismut scalar; calibrated once on the Heisenberg family.
FORM_PAIRING_CONSTANT = 1.0


class Endomorphism:
    """Endomorphism commuting with J0, stored as its holomorphic block."""

    def __init__(self, matrix: np.ndarray):
        M = np.asarray(matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValidationError(f"expected a square matrix, got {M.shape}")
        self.matrix = M
        self.n = M.shape[0]

    def full(self) -> np.ndarray:
        """Block-diagonal action on the complexified coordinates."""
        n = self.n
        F = np.zeros((2 * n, 2 * n), dtype=complex)
        F[:n, :n] = self.matrix
        F[n:, n:] = np.conj(self.matrix)
        return F

    def real_matrix(self) -> np.ndarray:
        """Action on real adapted coordinates."""
        from .lie_core import adapted_frame

        S, Sinv, _, _ = adapted_frame(self.n)
        M = Sinv @ self.full() @ S
        return M.real

    def frobenius_sq(self) -> float:
        """Squared Frobenius norm of the real 2n x 2n matrix: 2 ||hol block||^2."""
        return float(2.0 * np.sum(np.abs(self.matrix) ** 2))

    def __repr__(self) -> str:
        return f"Endomorphism(n={self.n})"


def eta_components(coeffs: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Holomorphic components eta_a of the Bismut 1-form, raw-array path."""
    n = G.shape[0]
    Ginv = np.linalg.inv(G)
    trace = np.einsum("arr->a", coeffs[:n, :n, :n])
    mixed = coeffs[:n, n:, n:]  # mu_{r kbar}^{lbar}
    return -1j * trace + 1j * np.einsum("kr,rkl,al->a", Ginv, mixed, G)


def eta_vector(coeffs: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Full 2n coefficient vector of eta (holomorphic half plus conjugates)."""
    h = eta_components(coeffs, G)
    return np.concatenate([h, np.conj(h)])


def rho_tensor(coeffs: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Dense 2-form tensor of rho_B = d(eta), raw-array path."""
    e = eta_vector(coeffs, G)
    return -np.einsum("abc,c->ab", coeffs, e)


def rho11_matrix(coeffs: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Coefficient matrix rho[i, j] with (rho_B)^{1,1} = -i rho[i, j] z^i w z^jbar."""
    n = G.shape[0]
    e = eta_vector(coeffs, G)
    mixed = -np.einsum("ijc,c->ij", coeffs[:n, n:, :], e)  # rho_B(Z_i, Z_jbar)
    return 1j * mixed


def rho20_matrix(coeffs: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Values rho_B(Z_i, Z_j) of the (2, 0) block."""
    n = G.shape[0]
    e = eta_vector(coeffs, G)
    return -np.einsum("ijc,c->ij", coeffs[:n, :n, :], e)


def eta(mu: LieBracket, g: HermitianMetric, tol: float = 1e-8) -> InvariantForm:
    """The real 1-form with rho_B = d(eta)."""
    require_integrable(mu, tol)
    return InvariantForm(eta_vector(mu.coeffs, g.matrix), mu.n, validate=False)


def rho_B(mu: LieBracket, g: HermitianMetric, tol: float = 1e-8) -> InvariantForm:
    """Bismut Ricci form, canonical path d_mu(eta)."""
    return d_mu(mu, eta(mu, g, tol))


def rho_B_2step(mu: LieBracket, g: HermitianMetric) -> InvariantForm:
    """Direct shortcut valid when the bracket is at most 2-step nilpotent:

    rho_B(X, Y) = -i g^{rbar k} g(mu(X, Y), mu(Z_r, Z_kbar)).
    """
    step = nilpotency_step(mu)
    if step is None or step > 2:
        raise NotTwoStepError(f"nilpotency step is {step}, need <= 2")
    n = mu.n
    G = g.matrix
    Ginv = np.linalg.inv(G)
    B = big_bilinear(g)
    # w[r, k, :] = mu(Z_r, Z_kbar) paired against mu(X, Y) through B
    pair = np.einsum("kr,rkC,CD->D", Ginv, mu.coeffs[:n, n:, :], B)
    T = -1j * np.einsum("abD,D->ab", mu.coeffs, pair)
    return InvariantForm(T, n, validate=False)


def p_of_bracket(mu: LieBracket, tol: float = 1e-8) -> Endomorphism:
    """Endomorphism P with omega_0(P X, Y) = (rho_B)^{1,1}(X, Y) at the standard metric."""
    require_integrable(mu, tol)
    G0 = np.eye(mu.n, dtype=complex)
    return Endomorphism(rho11_matrix(mu.coeffs, G0).T)


def p_of_metric(mu0: LieBracket, g: HermitianMetric, tol: float = 1e-8) -> Endomorphism:
    """Endomorphism P(omega) with omega(P X, Y) = (rho_B)^{1,1}(X, Y) for (mu0, g)."""
    require_integrable(mu0, tol)
    rho = rho11_matrix(mu0.coeffs, g.matrix)
    return Endomorphism((rho @ np.linalg.inv(g.matrix)).T)


def bismut_scalar(mu: LieBracket) -> float:
    """b = -||sum_r mu(Z_r, Z_rbar)||^2 in the standard Hermitian norm.

    Equals the bilinear square of the trace vector, which is real and
    nonpositive because the vector is anti-real.
    """
    n = mu.n
    v = mu.coeffs[np.arange(n), np.arange(n, 2 * n), :].sum(axis=0)
    b = 2.0 * np.sum(v[:n] * v[n:])
    return float(b.real)


@dataclass
class StaticFit:
    defect: float      # max norm of r*omega - (rho_B)^{1,1} at the given r
    r_best: float      # least squares rate
    residual_best: float


def static_defect(mu: LieBracket, g: HermitianMetric, r: float, tol: float = 1e-8) -> StaticFit:
    """Distance of (g, rho_B) from the static condition r*omega = (rho_B)^{1,1}."""
    require_integrable(mu, tol)
    omega = fundamental_form(g).tensor
    rho11 = rho_B(mu, g, tol).bidegree_part(1, 1).tensor
    defect = float(np.abs(r * omega - rho11).max())
    denom = float(np.sum(np.abs(omega) ** 2))
    r_best = float(np.sum(rho11 * np.conj(omega)).real / denom)
    residual = float(np.abs(r_best * omega - rho11).max())
    return StaticFit(defect=defect, r_best=r_best, residual_best=residual)


def bismut_scalar_pairing_check(mu: LieBracket) -> tuple[float, float]:
    """(b, pairing) where pairing = <rho_B, omega_0> under form_inner.

    The calibrated relation is b = FORM_PAIRING_CONSTANT * pairing.
    """
    g0 = HermitianMetric(np.eye(mu.n))
    b = bismut_scalar(mu)
    pairing = form_inner(rho_B(mu, g0), fundamental_form(g0), g0)
    return b, float(pairing.real)


def p_annihilates_center_defect(mu: LieBracket) -> float:
    """Max norm of P_mu applied to an orthonormal basis of the center."""
    P = p_of_bracket(mu).full()
    xi = center(mu)
    if xi.dim == 0:
        return 0.0
    return float(np.abs(P @ xi.basis).max())
