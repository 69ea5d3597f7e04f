"""Levi-Civita and Bismut connections, their curvature and Ricci objects.

Connections are stored over the real adapted basis {E_1..E_2n} as tensors
Gamma[i, j, k] with nabla_{E_i} E_j = Gamma[i, j, k] E_k.  The Bismut
connection is built as nabla^g + (1/2) g^{-1} c with torsion 3-form
c(X, Y, Z) = -d omega(JX, JY, JZ); its defining properties (metric,
J-parallel, totally skew torsion) are verified at construction and raise
if violated, which pins the sign conventions.

Curvature follows R(X, Y) = [nabla_X, nabla_Y] - nabla_{[X, Y]} and the
Ricci traces use ric(X, Y) = g^{kr} R(e_k, X, Y, e_r) together with
rho(X, Y) = (1/2) g^{kr} g(R(X, Y) e_k, J e_r).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NotTwoStepError, ValidationError
from .hermitian_forms import (
    HermitianMetric,
    InvariantForm,
    codifferential,
    d_mu,
    fundamental_form,
    gram_real,
    require_integrable,
    transform_form,
)
from .lie_core import LieBracket, adapted_frame, center, nilpotency_step, standard_j_diag


@dataclass
class Connection:
    """Left-invariant connection over the real adapted basis."""

    coeffs: np.ndarray  # (2n, 2n, 2n), nabla_{E_i} E_j = coeffs[i, j, k] E_k
    metric_compatible: bool = False
    j_parallel: bool = False

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def matrices(self) -> np.ndarray:
        """Stack of the nabla_{E_i} matrices, shape (2n, 2n, 2n) as [i, row, col]."""
        return self.coeffs.transpose(0, 2, 1)


@dataclass
class CurvatureTensor:
    """R[i, j, m, l]: the E_m component of R(E_i, E_j) E_l."""

    coeffs: np.ndarray

    def lowered(self, gram: np.ndarray) -> np.ndarray:
        """R(X, Y, Z, W) = g(R(X, Y) Z, W) as [i, j, l, w]."""
        return np.einsum("ijml,mw->ijlw", self.coeffs, gram)


@dataclass
class BilinearForm:
    matrix: np.ndarray  # (2n, 2n) real
    symmetric: bool = False

    def one_one_part(self) -> "BilinearForm":
        """J-average: b^{1,1}(X, Y) = (b(X, Y) + b(JX, JY)) / 2."""
        n = self.matrix.shape[0] // 2
        _, _, J, _ = adapted_frame(n)
        avg = 0.5 * (self.matrix + J.T @ self.matrix @ J)
        return BilinearForm(matrix=avg, symmetric=self.symmetric)


class RicciData(NamedTuple):
    ric_g: BilinearForm
    ric_b: BilinearForm
    rho_b_trace: InvariantForm
    rho_c: InvariantForm


def levi_civita(mu: LieBracket, g: HermitianMetric, jacobi_tol: float = 1e-8) -> Connection:
    """Koszul formula for left-invariant metrics:

    2 g(nabla_X Y, Z) = g(mu(X,Y), Z) - g(mu(Y,Z), X) + g(mu(Z,X), Y).
    """
    from .lie_core import jacobi_defect

    if jacobi_defect(mu) > jacobi_tol:
        raise ValidationError("bracket violates the Jacobi identity beyond tolerance")
    c = mu.real_structure()
    gram = gram_real(g)
    k1 = np.einsum("ijl,lk->ijk", c, gram)
    k2 = np.einsum("jkl,li->ijk", c, gram)
    k3 = np.einsum("kil,lj->ijk", c, gram)
    rhs = 0.5 * (k1 - k2 + k3)
    gamma = np.einsum("kl,ijl->ijk", np.linalg.inv(gram), rhs)
    return Connection(coeffs=gamma, metric_compatible=True, j_parallel=False)


def torsion_three_form(mu: LieBracket, g: HermitianMetric) -> InvariantForm:
    """Bismut torsion c(X, Y, Z) = -d omega(JX, JY, JZ), complexified tensor."""
    dw = d_mu(mu, fundamental_form(g)).tensor
    j = standard_j_diag(mu.n)
    scale = j[:, None, None] * j[None, :, None] * j[None, None, :]
    return InvariantForm(-scale * dw, mu.n, validate=False)


def bismut(mu: LieBracket, g: HermitianMetric, tol: float = 1e-8):
    """Bismut connection and its torsion 3-form.

    Returns (Connection, c).  Raises if the defining residuals (metric
    compatibility, J-parallelism, total skewness of the torsion) exceed
    tolerance, which catches convention errors early.
    """
    require_integrable(mu, tol)
    lc = levi_civita(mu, g, jacobi_tol=max(tol, 1e-8))
    c_form = torsion_three_form(mu, g)
    S, _, J_real, _ = adapted_frame(mu.n)
    c_real_t = transform_form(c_form.tensor, S)
    if np.abs(c_real_t.imag).max() > 1e-9 * max(np.abs(c_real_t).max(), 1.0):
        raise ValidationError("torsion 3-form is not real")
    c_real = c_real_t.real
    gram = gram_real(g)
    graminv = np.linalg.inv(gram)
    gamma = lc.coeffs + 0.5 * np.einsum("kl,ijl->ijk", graminv, c_real)
    conn = Connection(coeffs=gamma, metric_compatible=True, j_parallel=True)

    scale = max(np.abs(gamma).max(), 1.0)
    mats = conn.matrices()
    compat = np.abs(np.einsum("iab,ac->ibc", mats, gram)
                    + np.einsum("ab,ibc->iac", gram, mats)).max()
    jres = np.abs(np.einsum("iab,bc->iac", mats, J_real)
                  - np.einsum("ab,ibc->iac", J_real, mats)).max()
    struct = mu.real_structure()
    torsion = gamma - gamma.transpose(1, 0, 2) - struct
    c_check = np.einsum("ijm,mx->xij", torsion, gram)
    skew = np.abs(c_check - c_real).max()
    if compat > tol * scale or jres > tol * scale or skew > tol * max(scale, 1.0):
        raise ValidationError(
            f"Bismut residuals too large (compat {compat:.2e}, J {jres:.2e}, skew {skew:.2e})")
    return conn, c_form


def curvature(conn: Connection, mu: LieBracket) -> CurvatureTensor:
    """R(X, Y) = [nabla_X, nabla_Y] - nabla_{mu(X, Y)} on the real basis."""
    mats = conn.matrices()
    struct = mu.real_structure()
    comm = np.einsum("iab,jbc->ijac", mats, mats)
    comm = comm - comm.transpose(1, 0, 2, 3)
    lower = np.einsum("ijk,kac->ijac", struct, mats)
    return CurvatureTensor(coeffs=comm - lower)


def ricci_forms(mu: LieBracket, g: HermitianMetric, tol: float = 1e-8) -> RicciData:
    """Ricci tensors of both connections plus the trace-path Bismut Ricci form
    and the Chern Ricci form rho_C = rho_B + d d* omega."""
    require_integrable(mu, tol)
    gram = gram_real(g)
    graminv = np.linalg.inv(gram)
    S, Sinv, J_real, _ = adapted_frame(mu.n)

    lc = levi_civita(mu, g)
    Rg = curvature(lc, mu)
    ric_g = np.einsum("kr,kimj,mr->ij", graminv, Rg.coeffs, gram, optimize=True)

    bc, _ = bismut(mu, g, tol)
    Rb = curvature(bc, mu)
    ric_b = np.einsum("kr,kimj,mr->ij", graminv, Rb.coeffs, gram, optimize=True)

    gj = gram @ J_real
    rho_real = 0.5 * np.einsum("kr,ijmk,mr->ij", graminv, Rb.coeffs, gj, optimize=True)
    rho_tensor = np.einsum("iA,ij,jB->AB", Sinv, rho_real, Sinv)
    rho_b_trace = InvariantForm(rho_tensor, mu.n, validate=False)

    omega = fundamental_form(g)
    ddstar = d_mu(mu, codifferential(mu, g, omega))
    rho_c = rho_b_trace + ddstar

    return RicciData(
        ric_g=BilinearForm(ric_g, symmetric=True),
        ric_b=BilinearForm(ric_b, symmetric=False),
        rho_b_trace=rho_b_trace,
        rho_c=rho_c,
    )


def torsion_tensor(conn: Connection, mu: LieBracket) -> np.ndarray:
    """T[i, j, k]: the E_k component of T(E_i, E_j)."""
    return conn.coeffs - conn.coeffs.transpose(1, 0, 2) - mu.real_structure()


def _gram_orthonormal(cols_real: np.ndarray, gram: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Gram-Schmidt with respect to ``gram``; drops dependent columns."""
    out = []
    for j in range(cols_real.shape[1]):
        v = cols_real[:, j].copy()
        for u in out:
            v = v - (u @ gram @ v) * u
        norm = float(v @ gram @ v)
        if norm > tol:
            out.append(v / np.sqrt(norm))
    return np.stack(out, axis=1) if out else np.zeros((cols_real.shape[0], 0))


def eberlein_oracle(mu: LieBracket, g: HermitianMetric, tol: float = 1e-9) -> BilinearForm:
    """Riemannian Ricci tensor of a 2-step nilpotent metric algebra from the
    skew maps iota(Z) defined by g(iota(Z) X, Y) = g(mu(X, Y), Z).

    Blockwise: ric = (1/2) sum_i iota(z_i)^2 on the complement of the center,
    ric(Z, Z*) = -(1/4) tr iota(Z) iota(Z*) on the center, zero on mixed pairs.
    """
    step = nilpotency_step(mu)
    if step is None or step > 2:
        raise NotTwoStepError(f"nilpotency step is {step}, need <= 2")
    m = mu.dim
    gram = gram_real(g)
    struct = mu.real_structure()

    xi = center(mu)
    _, Sinv, _, _ = adapted_frame(mu.n)
    # real span of the (conjugation-stable) center
    rc = Sinv @ xi.basis if xi.dim else np.zeros((m, 0))
    cand = np.concatenate([rc.real, rc.imag], axis=1)
    Z = _gram_orthonormal(cand, gram)
    p = Z.shape[1]
    # g-orthogonal complement of the center
    if p:
        proj = np.eye(m) - Z @ (Z.T @ gram)
    else:
        proj = np.eye(m)
    V = _gram_orthonormal(proj, gram)
    q = V.shape[1]
    if p + q != m:
        raise ValidationError("center splitting failed to span the algebra")

    # iota(z_i) on the complement, matrix entries in the V basis
    brackets = np.einsum("ia,jb,ijk->abk", V, V, struct)  # mu(v_a, v_b) real coords
    iotas = np.einsum("abk,kl,li->iba", brackets, gram, Z) if p else np.zeros((0, q, q))
    # iotas[i, b, a] = g(mu(v_a, v_b), z_i) = g(iota(z_i) v_a, v_b) -> row b, col a

    ric_vv = 0.5 * sum(iotas[i] @ iotas[i] for i in range(p)) if p else np.zeros((q, q))
    ric_zz = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            ric_zz[i, j] = -0.25 * np.trace(iotas[i] @ iotas[j])

    basis = np.concatenate([V, Z], axis=1)
    block = np.zeros((m, m))
    block[:q, :q] = ric_vv
    block[q:, q:] = ric_zz
    binv = np.linalg.inv(basis)
    return BilinearForm(matrix=binv.T @ block @ binv, symmetric=True)
