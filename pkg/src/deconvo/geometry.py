"""Tangent-space projections at rank-1 points and descent-cone geometry.

The tangent space at X0 = nu h0 m0^* is T = {h0 a^* + b m0^*}.  A unit
descent direction decomposes as

    Z = (-beta + i*iota) h0 m0^* + gamma h0 m0p^* + eta h0p m0^* + M

with beta the "actual decrease" of the nuclear norm, M = P_Tperp(Z), and
gamma, eta >= 0 after absorbing phases into the unit vectors m0p, h0p.
Membership in the closed descent cone is equivalent to
beta >= ||P_Tperp(Z)||_*.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .model import apply_A, complex_gaussian, unit_complex_gaussian


@dataclass
class TangentSpace:
    """Base point (h0, m0) of the rank-1 variety, with cached projectors."""

    h0: np.ndarray
    m0: np.ndarray

    def __post_init__(self):
        self.h0 = np.asarray(self.h0, dtype=complex)
        self.m0 = np.asarray(self.m0, dtype=complex)
        for name, v in (("h0", self.h0), ("m0", self.m0)):
            if v.ndim != 1 or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise InvalidInputError(f"{name} must be a unit vector")
        self.Ph = np.outer(self.h0, self.h0.conj())
        self.Pm = np.outer(self.m0, self.m0.conj())

    @property
    def K(self):
        return len(self.h0)

    @property
    def N(self):
        return len(self.m0)

    @property
    def dim(self):
        """Complex dimension of T."""
        return self.K + self.N - 1

    def base_matrix(self):
        return np.outer(self.h0, self.m0.conj())


def _check_shape(ts, Z):
    Z = np.asarray(Z, dtype=complex)
    if Z.shape != (ts.K, ts.N):
        raise InvalidInputError(f"matrix shape {Z.shape} does not match ({ts.K}, {ts.N})")
    return Z


def project_T(ts, Z):
    """Orthogonal projection onto the tangent space."""
    Z = _check_shape(ts, Z)
    hZ = ts.Ph @ Z
    return hZ + (Z - hZ) @ ts.Pm


def project_Tperp(ts, Z):
    """Projection onto the orthogonal complement: (I - h0h0^*) Z (I - m0m0^*)."""
    Z = _check_shape(ts, Z)
    W = Z - ts.Ph @ Z
    return W - W @ ts.Pm


def first_orthogonal_unit(v):
    """First standard basis vector Gram-Schmidt'ed against v (deterministic)."""
    v = np.asarray(v, dtype=complex)
    for i in range(len(v)):
        w = np.zeros_like(v)
        w[i] = 1.0
        w -= v * (v.conj() @ w)
        n = np.linalg.norm(w)
        if n > 1e-7:
            return w / n
    raise InvalidInputError("no orthogonal direction exists (dimension 1)")


def orthonormal_complement(v):
    """Columns form an orthonormal basis of the complement of span{v}.

    Householder-based, deterministic, O(d^2).
    """
    v = np.asarray(v, dtype=complex)
    d = len(v)
    if d == 1:
        return np.zeros((1, 0), dtype=complex)
    alpha = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    w = v.copy()
    w[0] += alpha
    H = np.eye(d, dtype=complex) - 2.0 * np.outer(w, w.conj()) / (w.conj() @ w)
    return H[:, 1:]


def tangent_basis(ts):
    """Deterministic orthonormal basis of T (length K + N - 1)."""
    basis = [ts.base_matrix()]
    U = orthonormal_complement(ts.m0)
    Fc = orthonormal_complement(ts.h0)
    for j in range(U.shape[1]):
        basis.append(np.outer(ts.h0, U[:, j].conj()))
    for i in range(Fc.shape[1]):
        basis.append(np.outer(Fc[:, i], ts.m0.conj()))
    return basis


@dataclass
class DescentDecomposition:
    """Coefficients and directions of the descent-cone decomposition of Z."""

    beta: float
    iota: float
    gamma: float
    eta: float
    h0_perp: np.ndarray
    m0_perp: np.ndarray
    M: np.ndarray

    @property
    def m_nuclear(self):
        return float(np.linalg.svd(self.M, compute_uv=False).sum())

    @property
    def m_frobenius(self):
        return float(np.linalg.norm(self.M))

    def reassemble(self, ts):
        """Rebuild Z from the stored coefficients and directions."""
        Z = (-self.beta + 1j * self.iota) * ts.base_matrix()
        Z = Z + self.gamma * np.outer(ts.h0, self.m0_perp.conj())
        Z = Z + self.eta * np.outer(self.h0_perp, ts.m0.conj())
        return Z + self.M

    def summary(self):
        """Serializable report of the decomposition."""
        return {
            "beta": self.beta,
            "iota": self.iota,
            "gamma": self.gamma,
            "eta": self.eta,
            "m_nuclear": self.m_nuclear,
            "m_frobenius": self.m_frobenius,
        }


def decompose_descent(ts, Z):
    """Split Z into tangent coefficients (beta, iota, gamma, eta) and M.

    gamma and eta are made nonnegative by absorbing phases into the unit
    directions; degenerate components fall back to the first deterministic
    orthogonal unit vector.
    """
    Z = _check_shape(ts, Z)
    if np.linalg.norm(Z) == 0.0:
        raise InvalidInputError("cannot decompose the zero matrix")
    X = ts.base_matrix()
    coeff = np.vdot(X, Z)  # <h0 m0^*, Z>_F, the tangent coefficient of Z
    beta = float(-coeff.real)
    iota = float(coeff.imag)
    # h0 (m0-perp)^* component: h0h0^* Z (I - m0m0^*)
    row = ts.h0.conj() @ Z
    row_perp = row - (row @ ts.m0) * ts.m0.conj()
    gamma = float(np.linalg.norm(row_perp))
    if gamma > 1e-14:
        m0_perp = row_perp.conj() / gamma
    else:
        gamma = 0.0
        m0_perp = (first_orthogonal_unit(ts.m0) if ts.N > 1
                   else np.zeros(ts.N, dtype=complex))
    # (h0-perp) m0^* component: (I - h0h0^*) Z m0m0^*
    col = Z @ ts.m0
    col_perp = col - ts.h0 * (ts.h0.conj() @ col)
    eta = float(np.linalg.norm(col_perp))
    if eta > 1e-14:
        h0_perp = col_perp / eta
    else:
        eta = 0.0
        h0_perp = (first_orthogonal_unit(ts.h0) if ts.K > 1
                   else np.zeros(ts.K, dtype=complex))
    M = project_Tperp(ts, Z)
    return DescentDecomposition(beta=beta, iota=iota, gamma=gamma, eta=eta,
                                h0_perp=h0_perp, m0_perp=m0_perp, M=M)


def nuclear_norm(X):
    """Sum of singular values."""
    return float(np.linalg.svd(np.asarray(X, dtype=complex), compute_uv=False).sum())


def nuclear_norm_2x2(a, b, c):
    """Closed-form nuclear norm of [[a, b], [c, 0]]: sqrt(a^2 + (|b|+|c|)^2)."""
    return float(np.hypot(a, abs(b) + abs(c)))


def beta_lower_bound(epsilon, nu):
    """Guaranteed decrease coefficient: min(epsilon / (4 nu), 1/2)."""
    if nu <= 0:
        raise InvalidInputError("nu must be positive")
    if epsilon < 0:
        raise InvalidInputError("epsilon must be nonnegative")
    return min(epsilon / (4.0 * nu), 0.5)


def is_descent_direction(ts, Z, tol=1e-10):
    """Membership in the closed descent cone, with the achieved margin.

    Returns (member, margin) where margin = -Re<h0 m0^*, Z> - ||P_Tperp Z||_*.
    """
    Z = _check_shape(ts, Z)
    if np.linalg.norm(Z) == 0.0:
        raise InvalidInputError("zero matrix has no direction")
    beta = -np.vdot(ts.base_matrix(), Z).real
    margin = float(beta - nuclear_norm(project_Tperp(ts, Z)))
    return margin >= -tol, margin


DESCENT_MIXES = ("tangent-heavy", "orthogonal-heavy", "uniform")


def sample_descent_cone(ts, seed, mix="uniform"):
    """Random unit element of the descent cone at X0.

    Draws gamma, eta and an orthogonal part M, then sets
    beta >= ||M||_* so membership holds by construction; `mix` balances
    the tangent and orthogonal components.
    """
    if mix not in DESCENT_MIXES:
        raise InvalidInputError(f"unknown mix {mix!r}; choose from {DESCENT_MIXES}")
    rng = np.random.default_rng(seed)
    G = complex_gaussian(rng, (ts.K, ts.N))
    M = project_Tperp(ts, G)
    nM = np.linalg.norm(M)
    if mix == "tangent-heavy":
        m_scale, t_scale, slack = 0.1, 1.0, 0.5
    elif mix == "orthogonal-heavy":
        m_scale, t_scale, slack = 1.0, 0.1, 0.0
    else:
        m_scale, t_scale, slack = 1.0, 1.0, 1.0
    if nM > 0:
        M *= m_scale / nM * rng.uniform(0.2, 1.0)
    gamma = t_scale * rng.uniform(0.0, 1.0)
    eta = t_scale * rng.uniform(0.0, 1.0)
    beta = nuclear_norm(M) + slack * rng.uniform(0.0, 1.0)
    h0_perp = ts.h0
    m0_perp = ts.m0
    if ts.K > 1:
        g = complex_gaussian(rng, ts.K)
        g -= ts.h0 * (ts.h0.conj() @ g)
        h0_perp = g / np.linalg.norm(g)
    else:
        eta = 0.0
    if ts.N > 1:
        g = complex_gaussian(rng, ts.N)
        g -= ts.m0 * (ts.m0.conj() @ g)
        m0_perp = g / np.linalg.norm(g)
    else:
        gamma = 0.0
    Z = (-beta) * ts.base_matrix()
    Z = Z + gamma * np.outer(ts.h0, m0_perp.conj())
    Z = Z + eta * np.outer(h0_perp, ts.m0.conj())
    Z = Z + M
    return Z / np.linalg.norm(Z)


@dataclass
class ConicEstimate:
    """Sampled upper bound on the minimum conic singular value."""

    value: float
    n_samples: int
    argmin: DescentDecomposition


def min_conic_singular_estimate(model, ts, n_samples, seed):
    """min over sampled descent directions of ||A(Z)||_2 / ||Z||_F.

    Sample 0 is always the canonical direction -h0 m0^*; later samples
    cycle through the mixes with streams derived from (seed, index), so
    estimates are nested in n_samples.
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    best_val = np.inf
    best_Z = None
    for i in range(n_samples):
        if i == 0:
            Z = -ts.base_matrix()
        else:
            mix = DESCENT_MIXES[(i - 1) % len(DESCENT_MIXES)]
            Z = sample_descent_cone(ts, np.random.SeedSequence((seed, i)), mix)
        val = np.linalg.norm(apply_A(model, Z)) / np.linalg.norm(Z)
        if val < best_val:
            best_val, best_Z = float(val), Z
    return ConicEstimate(value=best_val, n_samples=n_samples,
                         argmin=decompose_descent(ts, best_Z))
