"""Invariant exterior calculus on the complexified algebra.

Forms are dense antisymmetric coefficient tensors over the 2n
complexified basis covectors zeta^1..zeta^n, zeta^1bar..zeta^nbar.
Wedge normalization is the determinant convention with no 1/r! factor:
(zeta^a wedge zeta^b)(Z_a, Z_b) = 1.

A Hermitian metric is the n x n matrix g[r, k] = g(Z_r, Z_kbar); its
bilinear extension to the complexification vanishes on (1,0) x (1,0)
pairs.  Under this convention the fundamental form of the identity
metric is -i sum_r zeta^r wedge zeta^rbar and real adapted basis vectors
have squared length 2.

Form inner products expand in a g-orthonormal real coframe and sum
coefficients over strictly increasing multi-indices; the codifferential
is the literal matrix adjoint of d_mu in those coordinates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IntegrabilityError, ValidationError
from .lie_core import LieBracket, adapted_frame, conj_tensor, standard_j_diag

DEFAULT_INTEGRABILITY_TOL = 1e-8


class HermitianMetric:
    """Positive definite Hermitian matrix g[r, k] = g(Z_r, Z_kbar)."""

    def __init__(self, matrix: np.ndarray, *, tol: float = 1e-10, validate: bool = True):
        G = np.asarray(matrix, dtype=complex)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {G.shape}")
        if validate:
            herm = np.abs(G - G.conj().T).max()
            if herm > tol * max(np.abs(G).max(), 1.0):
                raise ValidationError(f"metric not Hermitian (defect {herm:.3e})")
            G = 0.5 * (G + G.conj().T)
            if np.linalg.eigvalsh(G).min() <= 0:
                raise ValidationError("metric is not positive definite")
        self.matrix = G
        self.n = G.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def __repr__(self) -> str:
        return f"HermitianMetric(n={self.n})"


class InvariantForm:
    """Antisymmetric multilinear form as a dense coefficient tensor."""

    def __init__(self, tensor: np.ndarray, n: int, *, validate: bool = True, tol: float = 1e-10):
        T = np.asarray(tensor, dtype=complex)
        if T.ndim and any(s != 2 * n for s in T.shape):
            raise ValidationError(f"tensor axes must have length {2 * n}, got {T.shape}")
        if validate and T.ndim >= 2:
            anti = np.abs(T + np.swapaxes(T, 0, 1)).max()
            if anti > tol * max(np.abs(T).max(), 1.0):
                raise ValidationError(f"form not antisymmetric (defect {anti:.3e})")
        self.tensor = T
        self.n = n

    @property
    def degree(self) -> int:
        return self.tensor.ndim

    def max_norm(self) -> float:
        return float(np.abs(self.tensor).max()) if self.tensor.size else 0.0

    def reality_defect(self) -> float:
        """Max deviation from the symmetry making the form real on real vectors."""
        return float(np.abs(self.tensor - conj_tensor(self.tensor, self.n)).max())

    def is_real(self, tol: float = 1e-10) -> bool:
        return self.reality_defect() <= tol * max(self.max_norm(), 1.0)

    def bidegree_part(self, p: int, q: int) -> "InvariantForm":
        """Projection onto coefficients with p unbarred and q barred indices."""
        return InvariantForm(_bidegree_mask(self.n, self.degree, p) * self.tensor,
                             self.n, validate=False)

    def bidegree_weights(self) -> dict[tuple[int, int], float]:
        """Max coefficient magnitude of each (p, q) component."""
        r = self.degree
        out = {}
        for p in range(r + 1):
            part = _bidegree_mask(self.n, r, p) * self.tensor
            w = float(np.abs(part).max()) if part.size else 0.0
            if w > 0.0:
                out[(p, r - p)] = w
        return out

    def __add__(self, other: "InvariantForm") -> "InvariantForm":
        return InvariantForm(self.tensor + other.tensor, self.n, validate=False)

    def __sub__(self, other: "InvariantForm") -> "InvariantForm":
        return InvariantForm(self.tensor - other.tensor, self.n, validate=False)

    def __rmul__(self, c: complex) -> "InvariantForm":
        return InvariantForm(c * self.tensor, self.n, validate=False)

    def __repr__(self) -> str:
        return f"InvariantForm(n={self.n}, degree={self.degree})"


class TamedForm:
    """Closed real 2-form split as Hermitian (1,1) part plus (2,0) part.

    ``omega`` holds the positive (1,1) part as a HermitianMetric; ``beta``
    is the complex antisymmetric matrix of (2,0) coefficients, with the
    full form Omega = omega_form + sum_{i<j} beta[i,j] zeta^i wedge zeta^j
    plus the conjugate.
    """

    def __init__(self, omega: HermitianMetric, beta: np.ndarray | None = None, *,
                 tol: float = 1e-10):
        self.omega = omega
        n = omega.n
        if beta is None:
            beta = np.zeros((n, n), dtype=complex)
        beta = np.asarray(beta, dtype=complex)
        if beta.shape != (n, n):
            raise ValidationError(f"beta must have shape ({n}, {n})")
        if np.abs(beta + beta.T).max() > tol * max(np.abs(beta).max(), 1.0):
            raise ValidationError("beta must be antisymmetric")
        self.beta = 0.5 * (beta - beta.T)
        self.n = n

    def full_form(self) -> InvariantForm:
        """The real 2-form omega + beta + conj(beta)."""
        n = self.n
        T = fundamental_form(self.omega).tensor.copy()
        T[:n, :n] += self.beta
        T[n:, n:] += np.conj(self.beta)
        return InvariantForm(T, n, validate=False)

    def __repr__(self) -> str:
        return f"TamedForm(n={self.n})"


@lru_cache(maxsize=32)
def _perms_with_signs(r: int):
    out = []
    for perm in itertools.permutations(range(r)):
        sign = 1
        for i in range(r):
            for j in range(i + 1, r):
                if perm[i] > perm[j]:
                    sign = -sign
        out.append((perm, sign))
    return out


@lru_cache(maxsize=64)
def _bidegree_mask_cached(n: int, degree: int, p: int):
    if degree == 0:
        return np.ones((), dtype=float) if p == 0 else np.zeros(())
    hol = np.concatenate([np.ones(n), np.zeros(n)])
    count = np.zeros((2 * n,) * degree)
    for axis in range(degree):
        shape = [1] * degree
        shape[axis] = 2 * n
        count = count + hol.reshape(shape)
    return (count == p).astype(float)


def _bidegree_mask(n: int, degree: int, p: int) -> np.ndarray:
    return _bidegree_mask_cached(n, degree, p)


def basis_form(n: int, *indices: int) -> InvariantForm:
    """Elementary wedge of coframe covectors, determinant convention.

    ``basis_form(2, 0, 2)`` is zeta^1 wedge zeta^1bar for n = 2.
    """
    r = len(indices)
    if len(set(indices)) != r:
        raise ValidationError("repeated index in elementary form")
    T = np.zeros((2 * n,) * r, dtype=complex)
    for perm, sign in _perms_with_signs(r):
        T[tuple(indices[p] for p in perm)] = sign
    return InvariantForm(T, n, validate=False)


def fundamental_form(g: HermitianMetric) -> InvariantForm:
    """omega = -i g[r, k] zeta^r wedge zeta^kbar, the (1,1) form of g."""
    n = g.n
    T = np.zeros((2 * n, 2 * n), dtype=complex)
    T[:n, n:] = -1j * g.matrix
    T[n:, :n] = 1j * g.matrix.T
    return InvariantForm(T, n, validate=False)


def metric_of(form: InvariantForm) -> HermitianMetric:
    """Inverse of ``fundamental_form`` on pure (1,1) real forms."""
    n = form.n
    if form.degree != 2:
        raise ValidationError("metric_of expects a 2-form")
    return HermitianMetric(1j * form.tensor[:n, n:])


def d_mu_tensor(m: np.ndarray, T: np.ndarray, n: int) -> np.ndarray:
    """Chevalley-Eilenberg differential of a dense antisymmetric tensor.

    ``m`` is a structure tensor in the same frame as ``T``.  Valid in any
    frame, which the codifferential exploits.
    """
    r = T.ndim
    dim = 2 * n
    out = np.zeros((dim,) * (r + 1), dtype=np.result_type(m, T, complex))
    if r + 1 > dim:
        return out
    perms = _perms_with_signs(r + 1)
    for combo in itertools.combinations(range(dim), r + 1):
        val = 0.0 + 0.0j
        for k in range(r + 1):
            for l in range(k + 1, r + 1):
                rest = combo[:k] + combo[k + 1:l] + combo[l + 1:r + 1]
                sign = -1 if (k + l) % 2 else 1
                val += sign * np.dot(m[combo[k], combo[l], :], T[(slice(None),) + rest])
        if val != 0.0:
            for perm, sign in perms:
                out[tuple(combo[p] for p in perm)] = sign * val
    return out


def d_mu(mu: LieBracket, form: InvariantForm) -> InvariantForm:
    """Exterior differential induced by the bracket."""
    if form.degree > 2 * mu.n - 1:
        raise ValidationError("degree exceeds 2n - 1")
    return InvariantForm(d_mu_tensor(mu.coeffs, form.tensor, mu.n), mu.n, validate=False)


def require_integrable(mu: LieBracket, tol: float = DEFAULT_INTEGRABILITY_TOL) -> None:
    from .lie_core import nijenhuis_defect

    defect = nijenhuis_defect(mu)
    if defect > tol:
        raise IntegrabilityError(f"Nijenhuis defect {defect:.3e} exceeds {tol:.1e}")


def dolbeault_split(mu: LieBracket, form: InvariantForm,
                    tol: float = DEFAULT_INTEGRABILITY_TOL):
    """Split d_mu(form) of a pure (p, q) form into (p+1, q) and (p, q+1) parts."""
    require_integrable(mu, tol)
    weights = form.bidegree_weights()
    if len(weights) != 1:
        raise ValidationError(f"form is not of pure bidegree: components {sorted(weights)}")
    (p, q), _ = next(iter(weights.items()))
    d = d_mu(mu, form)
    out_pq = d.bidegree_part(p + 1, q)
    out_qp = d.bidegree_part(p, q + 1)
    leak = d - out_pq - out_qp
    scale = max(d.max_norm(), 1.0)
    if leak.max_norm() > tol * scale:
        raise IntegrabilityError(f"bidegree leakage {leak.max_norm():.3e} for ({p},{q}) form")
    return out_pq, out_qp


def big_bilinear(g: HermitianMetric) -> np.ndarray:
    """Bilinear extension of g to the complexification, shape (2n, 2n)."""
    n = g.n
    B = np.zeros((2 * n, 2 * n), dtype=complex)
    B[:n, n:] = g.matrix
    B[n:, :n] = g.matrix.T
    return B


def gram_real(g: HermitianMetric) -> np.ndarray:
    """Real Gram matrix of g on the adapted real basis."""
    S, _, _, _ = adapted_frame(g.n)
    B = big_bilinear(g)
    gram = S.T @ B @ S
    return gram.real


def orthonormal_real_frame(g: HermitianMetric):
    """g-orthonormal real frame (complexified coordinates) and its inverse."""
    gram = gram_real(g)
    L = np.linalg.cholesky(gram)
    U_real = np.linalg.inv(L).T  # columns: orthonormal vectors in real coords
    S, _, _, _ = adapted_frame(g.n)
    U = S @ U_real
    return U, np.linalg.inv(U)


def transform_form(T: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Pull a coefficient tensor through the basis change with columns M[:, j]."""
    out = T
    for axis in range(T.ndim):
        out = np.tensordot(out, M, axes=([0], [0]))
    return out


def form_inner(a: InvariantForm, b: InvariantForm, g: HermitianMetric) -> complex:
    """Inner product, coefficient sums over increasing indices in a g-orthonormal coframe."""
    if a.degree != b.degree:
        raise ValidationError("forms must have equal degree")
    U, _ = orthonormal_real_frame(g)
    r = a.degree
    if r == 0:
        return complex(a.tensor * np.conj(b.tensor))
    au = transform_form(a.tensor, U)
    bu = transform_form(b.tensor, U)
    return complex(np.sum(au * np.conj(bu)) / math.factorial(r))


def _increasing(dim: int, r: int):
    return list(itertools.combinations(range(dim), r))


def _coords_from_tensor(T: np.ndarray, combos) -> np.ndarray:
    return np.array([T[c] for c in combos]) if T.ndim else np.array([complex(T)])


def _tensor_from_coords(coords: np.ndarray, combos, r: int, dim: int) -> np.ndarray:
    if r == 0:
        return np.asarray(coords[0])
    T = np.zeros((dim,) * r, dtype=complex)
    for val, combo in zip(coords, combos):
        if val != 0.0:
            for perm, sign in _perms_with_signs(r):
                T[tuple(combo[p] for p in perm)] = sign * val
    return T


def codifferential(mu: LieBracket, g: HermitianMetric, form: InvariantForm) -> InvariantForm:
    """Adjoint of d_mu with respect to the g-induced form inner products."""
    r = form.degree
    if r < 1:
        raise ValidationError("codifferential needs degree >= 1")
    n = mu.n
    dim = 2 * n
    U, Uinv = orthonormal_real_frame(g)
    mu_u = np.einsum("Ai,Bj,ABC,kC->ijk", U, U, mu.coeffs, Uinv)
    combos_lo = _increasing(dim, r - 1)
    combos_hi = _increasing(dim, r)
    D = np.zeros((len(combos_hi), len(combos_lo)), dtype=complex)
    for col, combo in enumerate(combos_lo):
        elem = basis_form(n, *combo).tensor if r - 1 else np.ones(())
        dT = d_mu_tensor(mu_u, elem, n)
        D[:, col] = _coords_from_tensor(dT, combos_hi)
    coords = _coords_from_tensor(transform_form(form.tensor, U), combos_hi)
    out_coords = D.conj().T @ coords
    out_u = _tensor_from_coords(out_coords, combos_lo, r - 1, dim)
    return InvariantForm(transform_form(out_u, Uinv) if r - 1 else out_u, n, validate=False)


def skt_defect(mu: LieBracket, g: HermitianMetric,
               tol: float = DEFAULT_INTEGRABILITY_TOL) -> float:
    """Norm of dbar dpartial omega; zero exactly for pluriclosed pairs.

    Measured in the g-induced form norm, which is invariant under the
    simultaneous equivalence (mu, g) -> (h . mu, transported g); a raw
    coefficient max-norm would not be.
    """
    require_integrable(mu, tol)
    omega = fundamental_form(g)
    d1 = d_mu(mu, omega).bidegree_part(2, 1)
    d2 = d_mu(mu, d1).bidegree_part(2, 2)
    if d2.max_norm() == 0.0:
        return 0.0
    return float(np.sqrt(form_inner(d2, d2, g).real))


def j_on_one_form(alpha: InvariantForm) -> InvariantForm:
    """(J alpha)(X) = alpha(J X) on 1-forms."""
    if alpha.degree != 1:
        raise ValidationError("expected a 1-form")
    return InvariantForm(standard_j_diag(alpha.n) * alpha.tensor, alpha.n, validate=False)


def lee_form(mu: LieBracket, g: HermitianMetric) -> InvariantForm:
    """Lee form theta = -J(d* omega)."""
    dstar = codifferential(mu, g, fundamental_form(g))
    return -1 * j_on_one_form(dstar)


def taming_margin(Omega: TamedForm) -> float:
    """Smallest eigenvalue of the symmetrized pairing (X, Y) -> Omega(JX, Y).

    Only the (1,1) part enters (the (2,0) + (0,2) block is J-anti-invariant
    and cancels in the symmetrization), so the computation uses it alone;
    normalized so the identity metric has margin 1.
    """
    g = Omega.omega
    S, _, J_real, _ = adapted_frame(g.n)
    W = (S.T @ _form_matrix(fundamental_form(g)) @ S).real
    A = J_real.T @ W
    sym = 0.5 * (A + A.T)
    return float(np.linalg.eigvalsh(sym).min() / 2.0)


def _form_matrix(form: InvariantForm) -> np.ndarray:
    if form.degree != 2:
        raise ValidationError("expected a 2-form")
    return form.tensor


@dataclass
class ClosednessReport:
    defect: float          # max norm of d Omega
    mixed_residual: float  # (2,1) + (1,2) components
    pure_residual: float   # (3,0) + (0,3) components


def closedness_defect(mu: LieBracket, Omega: TamedForm) -> ClosednessReport:
    """Max norm of d Omega together with its bidegree-split residuals."""
    d = d_mu(mu, Omega.full_form())
    mixed = (d.bidegree_part(2, 1) + d.bidegree_part(1, 2)).max_norm()
    pure = (d.bidegree_part(3, 0) + d.bidegree_part(0, 3)).max_norm()
    return ClosednessReport(defect=d.max_norm(), mixed_residual=mixed, pure_residual=pure)


def transport_metric(h: np.ndarray, g: HermitianMetric) -> HermitianMetric:
    """Metric of the equivalent pair: (h . mu, transport) ~ (mu, g)."""
    hinv = np.linalg.inv(np.asarray(h, dtype=complex))
    return HermitianMetric(hinv.T @ g.matrix @ hinv.conj())


def random_metric(rng: np.random.Generator, n: int, spread: float = 1.0) -> HermitianMetric:
    """Random positive definite Hermitian matrix with moderate conditioning."""
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    G = A @ A.conj().T * (spread / n) + 0.5 * np.eye(n)
    return HermitianMetric(G)
