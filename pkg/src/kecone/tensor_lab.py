"""Curvature-tensor algebra on orthonormal frames, plus the very-strong-negativity
quadratic-form machinery for Hermitian curvature tensors.

Conventions (fixed here, used everywhere):

* Real frames are orthonormal and ordered in complex pairs
  ``(e_1, J e_1, e_2, J e_2, ...)``; the complex structure acts as
  ``J e_{2k} = e_{2k+1}``, ``J e_{2k+1} = -e_{2k}``.
* ``R(X, Y, Z, W)`` denotes ``<R(X,Y)Z, W>`` with the sign fixed so that the
  sectional curvature of an orthonormal pair is ``sec(X, Y) = R(X, Y, Y, X)``.
  A space of constant curvature ``kappa`` then has ``R = (kappa/2) g (*) g``
  for the Kulkarni-Nomizu product ``(*)`` implemented below.
* Hermitian coefficients ``C[i, j, k, l]`` stand for ``R_{i jbar k lbar}``,
  normalized so the constant-HSC tensor with value ``H`` maps to
  ``(H/4) (g_{i jbar} g_{k lbar} + g_{i lbar} g_{k jbar})`` on an orthonormal
  frame; equivalently ``C = 2 R_C(Z_i, Zbar_j, Z_k, Zbar_l)`` with
  ``Z_i = (e_i - i J e_i)/2``.  The round-trip between the two pictures is
  exercised in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeCoefficient

__all__ = [
    "RiemannTensor",
    "HermitianCurvature",
    "VsnVerdict",
    "standard_complex_structure",
    "kulkarni_nomizu",
    "constant_hsc_tensor",
    "oneill_submersion_correction",
    "hermitian_metric_product",
    "hermitian_from_form",
    "bland_decomposition_tensor",
    "vsn_test",
    "hermitian_from_riemann",
    "riemann_from_hermitian",
]


def standard_complex_structure(n_real: int) -> np.ndarray:
    """Matrix of J on R^{n_real} in the paired frame convention."""
    if n_real % 2:
        raise DimensionMismatch(f"need an even real dimension, got {n_real}")
    J = np.zeros((n_real, n_real))
    for k in range(n_real // 2):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


@dataclass(frozen=True)
class RiemannTensor:
    """Algebraic curvature tensor on an orthonormal frame of R^{n_real}."""

    coeff: np.ndarray  # shape (m, m, m, m)
    n_real: int

    def __post_init__(self):
        m = self.n_real
        if self.coeff.shape != (m, m, m, m):
            raise DimensionMismatch(
                f"coefficient array {self.coeff.shape} does not match dimension {m}"
            )

    def __add__(self, other: "RiemannTensor") -> "RiemannTensor":
        if other.n_real != self.n_real:
            raise DimensionMismatch("cannot add tensors of different dimensions")
        return RiemannTensor(self.coeff + other.coeff, self.n_real)

    def __rmul__(self, scalar: float) -> "RiemannTensor":
        return RiemannTensor(float(scalar) * self.coeff, self.n_real)

    def sectional(self, v: np.ndarray, w: np.ndarray) -> float:
        """Sectional curvature of span(v, w) (need not be orthonormal)."""
        num = float(np.einsum("abcd,a,b,c,d->", self.coeff, v, w, w, v, optimize=True))
        gram = (v @ v) * (w @ w) - (v @ w) ** 2
        return num / gram

    def sectional_batch(self, V: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Vectorized sectional curvature over rows of V, W."""
        num = np.einsum("abcd,pa,pb,pc,pd->p", self.coeff, V, W, W, V, optimize=True)
        gram = np.einsum("pa,pa->p", V, V, optimize=True) * np.einsum("pa,pa->p", W, W, optimize=True) \
            - np.einsum("pa,pa->p", V, W, optimize=True) ** 2
        return num / gram

    def ricci(self) -> np.ndarray:
        """Ricci tensor Ric(X, Y) = sum_c R(X, e_c, e_c, Y)."""
        return np.einsum("accb->ab", self.coeff)

    def symmetry_defect(self) -> float:
        """Largest violation of the pair (anti)symmetries."""
        R = self.coeff
        return max(
            float(np.max(np.abs(R + np.swapaxes(R, 0, 1)))),
            float(np.max(np.abs(R + np.swapaxes(R, 2, 3)))),
            float(np.max(np.abs(R - np.transpose(R, (2, 3, 0, 1))))),
        )

    def bianchi_defect(self) -> float:
        """Largest violation of the first Bianchi identity."""
        R = self.coeff
        cyc = R + np.transpose(R, (1, 2, 0, 3)) + np.transpose(R, (2, 0, 1, 3))
        return float(np.max(np.abs(cyc)))

    def kahler_defect(self, J: np.ndarray | None = None) -> float:
        """Largest violation of R(JX, JY, Z, W) = R(X, Y, Z, W) (both pairs)."""
        if J is None:
            J = standard_complex_structure(self.n_real)
        R = self.coeff
        first = np.einsum("abcd,ax,by->xycd", R, J, J, optimize=True)
        last = np.einsum("abcd,cx,dy->abxy", R, J, J, optimize=True)
        return max(float(np.max(np.abs(first - R))), float(np.max(np.abs(last - R))))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeff ** 2)))

    def to_json_dict(self) -> dict:
        """Frame-indexed coefficient list [a, b, c, d, value] (nonzeros only)."""
        idx = np.argwhere(self.coeff != 0.0)
        return {
            "schema_version": 1,
            "kind": "riemann_tensor",
            "n_real": self.n_real,
            "coefficients": [[int(a), int(b), int(c), int(d),
                              float(self.coeff[a, b, c, d])]
                             for a, b, c, d in idx],
        }


def kulkarni_nomizu(h1: np.ndarray, h2: np.ndarray) -> RiemannTensor:
    """Kulkarni-Nomizu product of two symmetric bilinear forms.

    Signs follow the sectional-curvature convention of this module:
    ``(g (*) g)(X, Y, Y, X) = 2`` for orthonormal ``X, Y``, so the constant
    curvature ``kappa`` tensor is ``(kappa/2) g (*) g``.
    """
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    if h1.shape != h2.shape or h1.ndim != 2 or h1.shape[0] != h1.shape[1]:
        raise DimensionMismatch(f"incompatible forms {h1.shape} and {h2.shape}")
    kn = (
        np.einsum("ad,bc->abcd", h1, h2, optimize=True)
        + np.einsum("bc,ad->abcd", h1, h2, optimize=True)
        - np.einsum("ac,bd->abcd", h1, h2, optimize=True)
        - np.einsum("bd,ac->abcd", h1, h2, optimize=True)
    )
    return RiemannTensor(kn, h1.shape[0])


def constant_hsc_tensor(n: int, H: float) -> RiemannTensor:
    """Curvature tensor of the Kahler model with constant holomorphic sectional
    curvature H on C^n (real dimension 2n, paired frame).

    Holomorphic planes have curvature H, totally real planes H/4, and the
    Ricci tensor equals ``(n+1) H / 2`` times the metric.
    """
    m = 2 * n
    g = np.eye(m)
    J = standard_complex_structure(m)
    T1 = np.einsum("ad,bc->abcd", g, g, optimize=True)
    T2 = np.einsum("ac,bd->abcd", g, g, optimize=True)
    T3 = np.einsum("ad,bc->abcd", J, J, optimize=True)
    T4 = np.einsum("ac,bd->abcd", J, J, optimize=True)
    T5 = np.einsum("ab,cd->abcd", J, J, optimize=True)
    return RiemannTensor((H / 4.0) * (T1 - T2 + T3 - T4 - 2.0 * T5), m)


def oneill_submersion_correction(base: RiemannTensor, lam: float) -> RiemannTensor:
    """Apply the Riemannian-submersion curvature correction for a circle-fibered
    hypersurface with principal curvature ``lam`` on its J-invariant subbundle,
    then remove the second-fundamental-form contribution ``(1/2) h (*) h`` with
    ``h = lam g``.

    The combined correction equals ``lam^2`` times the constant-HSC(-4) tensor,
    so for ``base = (1/f^2) R0`` the output is ``(lam^2 + 1/f^2) R0``.
    """
    m = base.n_real
    g = np.eye(m)
    J = standard_complex_structure(m)
    lam2 = float(lam) ** 2
    # <JX,Z><JY,W> - <JY,Z><JX,W> + 2 <JZ,W><JX,Y>, with <J e_a, e_c> = J[c,a]
    oneill = (
        np.einsum("ca,db->abcd", J, J, optimize=True)
        - np.einsum("cb,da->abcd", J, J, optimize=True)
        + 2.0 * np.einsum("dc,ba->abcd", J, J, optimize=True)
    )
    shape_term = -0.5 * kulkarni_nomizu(lam * g, lam * g).coeff
    return RiemannTensor(base.coeff + lam2 * oneill + shape_term, m)


# ---------------------------------------------------------------------------
# Hermitian (complex-notation) curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HermitianCurvature:
    """Coefficients ``C[i, j, k, l] = R_{i jbar k lbar}`` on C^n."""

    coeff: np.ndarray  # complex, shape (n, n, n, n)
    n: int

    def __post_init__(self):
        n = self.n
        if self.coeff.shape != (n, n, n, n):
            raise DimensionMismatch(
                f"coefficient array {self.coeff.shape} does not match dimension {n}"
            )

    def symmetry_defect(self) -> float:
        """Largest violation of the Hermitian curvature symmetries."""
        C = self.coeff
        conj_pair = np.conj(np.transpose(C, (1, 0, 3, 2)))  # R_{ij. kl.} = conj R_{ji. lk.}
        swap_ik = np.transpose(C, (2, 1, 0, 3))             # R_{ij. kl.} = R_{kj. il.}
        swap_jl = np.transpose(C, (0, 3, 2, 1))             # R_{ij. kl.} = R_{il. kj.}
        return max(
            float(np.max(np.abs(C - conj_pair))),
            float(np.max(np.abs(C - swap_ik))),
            float(np.max(np.abs(C - swap_jl))),
        )

    def quadratic_form(self, xi: np.ndarray) -> float:
        """Siu's form Q(xi) = sum R_{i jbar k lbar} xi^{i jbar} conj(xi^{l kbar})."""
        q = np.einsum("ijkl,ij,lk->", self.coeff, xi, np.conj(xi), optimize=True)
        return float(q.real)

    def to_json_dict(self) -> dict:
        """Frame-indexed coefficient list [i, j, k, l, re, im] (nonzeros only)."""
        idx = np.argwhere(self.coeff != 0.0)
        return {
            "schema_version": 1,
            "kind": "hermitian_curvature",
            "n": self.n,
            "coefficients": [[int(i), int(j), int(k), int(l),
                              float(self.coeff[i, j, k, l].real),
                              float(self.coeff[i, j, k, l].imag)]
                             for i, j, k, l in idx],
        }


def hermitian_metric_product(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """The (0,4) building block ``h_{i jbar} k_{k lbar} + h_{i lbar} k_{k jbar}``."""
    h = np.asarray(h, dtype=complex)
    k = np.asarray(k, dtype=complex)
    if h.shape != k.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"incompatible forms {h.shape} and {k.shape}")
    return np.einsum("ij,kl->ijkl", h, k, optimize=True) + np.einsum("il,kj->ijkl", h, k, optimize=True)


def hermitian_from_form(h: np.ndarray) -> HermitianCurvature:
    """Tensor ``H_{i jbar k lbar} = -(h_{i jbar} h_{k lbar} + h_{i lbar} h_{k jbar})``
    induced by a real (1,1)-form; very strongly negative iff h is positive."""
    h = np.asarray(h, dtype=complex)
    return HermitianCurvature(-hermitian_metric_product(h, h), h.shape[0])


def bland_decomposition_tensor(
    g: np.ndarray,
    psi_grad: np.ndarray,
    A: float,
    B: float,
    C: float,
    psi_hessian: np.ndarray,
) -> HermitianCurvature:
    """Assemble the three-term decomposition

        R_{i jbar k lbar} = -A (g g)_sym - B (psi psi)_sym - C t_i tbar_j t_k tbar_l

    with semipositive weights, a positive metric g, a plurisubharmonic Hessian
    and gradient vector t.  With A > 0 the result is very strongly negative.
    """
    if A < 0 or B < 0 or C < 0:
        raise NegativeCoefficient(f"weights must be >= 0, got A={A}, B={B}, C={C}")
    g = np.asarray(g, dtype=complex)
    n = g.shape[0]
    eig_g = np.linalg.eigvalsh(g)
    if eig_g[0] <= 0:
        raise NegativeCoefficient("metric form must be positive definite")
    psi_hessian = np.asarray(psi_hessian, dtype=complex)
    if np.linalg.eigvalsh(psi_hessian)[0] < -1e-12:
        raise NegativeCoefficient("psi_hessian must be positive semidefinite")
    v = np.asarray(psi_grad, dtype=complex)
    grad_term = np.einsum("i,j,k,l->ijkl", v, np.conj(v), v, np.conj(v), optimize=True)
    coeff = (
        -A * hermitian_metric_product(g, g)
        - B * hermitian_metric_product(psi_hessian, psi_hessian)
        - C * grad_term
    )
    return HermitianCurvature(coeff, n)


@dataclass(frozen=True)
class VsnVerdict:
    is_vsn: bool
    worst_margin: float
    worst_xi: np.ndarray

    def __iter__(self):
        return iter((self.is_vsn, self.worst_margin))

    def to_json_dict(self) -> dict:
        return {
            "is_vsn": bool(self.is_vsn),
            "worst_margin": float(self.worst_margin),
            "worst_xi_real": np.real(self.worst_xi).tolist(),
            "worst_xi_imag": np.imag(self.worst_xi).tolist(),
        }


def vsn_test(R: HermitianCurvature, trials: int, seed: int) -> VsnVerdict:
    """Probe very strong negativity: evaluate Q over the n^2 coordinate matrices
    and ``trials`` seeded random complex matrices.

    Returns the smallest observed margin ``-Q(xi)/|xi|^2``; the tensor counts as
    very strongly negative iff that margin is positive.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    n = R.n
    rng = np.random.default_rng(seed)
    worst_margin = np.inf
    worst_xi = None
    candidates = []
    for i in range(n):
        for j in range(n):
            xi = np.zeros((n, n), dtype=complex)
            xi[i, j] = 1.0
            candidates.append(xi)
    for _ in range(trials):
        candidates.append(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    for xi in candidates:
        margin = -R.quadratic_form(xi) / float(np.sum(np.abs(xi) ** 2))
        if margin < worst_margin:
            worst_margin = margin
            worst_xi = xi
    return VsnVerdict(bool(worst_margin > 0.0), float(worst_margin), worst_xi)


# ---------------------------------------------------------------------------
# Real <-> Hermitian conversion (paired frame)
# ---------------------------------------------------------------------------


def _holo_frame(n: int) -> np.ndarray:
    """Matrix Z with Z[a, i] the e_a-coefficient of Z_i = (e_i - i J e_i)/2."""
    Z = np.zeros((2 * n, n), dtype=complex)
    for i in range(n):
        Z[2 * i, i] = 0.5
        Z[2 * i + 1, i] = -0.5j
    return Z


def hermitian_from_riemann(R: RiemannTensor) -> HermitianCurvature:
    """Complexify a Kahler curvature tensor to Hermitian coefficients.

    Normalized so the constant-HSC(-4) tensor maps to ``hermitian_from_form``
    of the identity (Q-margin 2 on diagonal coordinate matrices).
    """
    if R.n_real % 2:
        raise DimensionMismatch("real dimension must be even")
    n = R.n_real // 2
    Z = _holo_frame(n)
    K = np.einsum("abcd,ai,bj,ck,dl->ijkl", R.coeff, Z, np.conj(Z), Z, np.conj(Z), optimize=True)
    return HermitianCurvature(2.0 * K, n)


def riemann_from_hermitian(H: HermitianCurvature) -> RiemannTensor:
    """Inverse of :func:`hermitian_from_riemann` on Kahler tensors."""
    n = H.n
    # coefficient of Z_i in e_a: e_{2i} = Z_i + conj(Z_i), J e_i = i Z_i - i conj(Z_i)
    C10 = np.zeros((2 * n, n), dtype=complex)
    for i in range(n):
        C10[2 * i, i] = 1.0
        C10[2 * i + 1, i] = 1j
    K = H.coeff / 2.0
    p1 = np.einsum("ai,bj,ck,dl,ijkl->abcd", C10, np.conj(C10), C10, np.conj(C10), K, optimize=True)
    p2 = -np.einsum("ai,bj,ck,dl,ijlk->abcd", C10, np.conj(C10), np.conj(C10), C10, K, optimize=True)
    return RiemannTensor(2.0 * np.real(p1 + p2), 2 * n)
