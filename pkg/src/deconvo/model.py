"""Signals, subspaces, and the lifted rank-1 measurement operator.

The forward map sends a K x N matrix X to the L measurements
``y_l = b_l^* X c_l`` where b_l are conjugated rows of the Fourier
transform of the deterministic isometry B and c_l are rows of the
scaled Fourier transform of the random Gaussian matrix C.  For rank-1
inputs X = h m^* this reproduces the DFT of the circular convolution
of w = B h and x = C conj(m).

Conventions (fixed package-wide):
  * unitary DFT, ``F v = fft(v) / sqrt(L)``;
  * Frobenius inner product ``<X, Z> = trace(X^* Z)``, conjugate-linear
    in the first argument;
  * C entries are complex Gaussian with variance 1/L so each c_l has
    identity covariance.
"""

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

B_TYPES = ("identity-columns", "random-isometry")


def complex_gaussian(rng, shape, scale=1.0):
    """i.i.d. complex Gaussian array, E|entry|^2 = scale^2."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * (scale / np.sqrt(2.0))


def unit_complex_gaussian(rng, n):
    v = complex_gaussian(rng, n)
    return v / np.linalg.norm(v)


@dataclass
class GroundTruth:
    """Unit vectors h0, m0 and a scale nu defining X0 = nu * h0 m0^*."""

    h0: np.ndarray
    m0: np.ndarray
    nu: float = 1.0

    def __post_init__(self):
        self.h0 = np.asarray(self.h0, dtype=complex)
        self.m0 = np.asarray(self.m0, dtype=complex)
        self.nu = float(self.nu)
        if self.nu < 0:
            raise InvalidInputError("nu must be nonnegative")
        for name, v in (("h0", self.h0), ("m0", self.m0)):
            if v.ndim != 1 or v.size == 0:
                raise InvalidInputError(f"{name} must be a nonempty vector")
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise InvalidInputError(f"{name} must have unit norm")

    @classmethod
    def random(cls, K, N, seed, nu=1.0):
        rng = np.random.default_rng(seed)
        return cls(unit_complex_gaussian(rng, K), unit_complex_gaussian(rng, N), nu)

    def lifted(self):
        """X0 = nu * h0 m0^* as a K x N matrix."""
        return self.nu * np.outer(self.h0, self.m0.conj())


@dataclass
class SubspaceModel:
    """Measurement model: dimensions, subspace matrices, and derived rows.

    b_rows[l] is the l-th row of conj(F B); c_rows[l] is the l-th row of
    sqrt(L) F C.  Both are materialized at build time; models are treated
    as immutable after construction.
    """

    L: int
    K: int
    N: int
    b_type: str
    seed: int
    B: np.ndarray
    C: np.ndarray
    b_rows: np.ndarray = field(repr=False)
    c_rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (1 <= self.K <= self.L) or self.N < 1:
            raise InvalidInputError(
                f"need 1 <= K <= L and N >= 1, got L={self.L} K={self.K} N={self.N}"
            )
        if self.b_type not in B_TYPES:
            raise InvalidInputError(f"unknown b_type {self.b_type!r}")


def build_model(L, K, N, b_type, seed):
    """Construct a SubspaceModel.

    b_type 'identity-columns' takes the first K standard basis columns for
    B (the classical wireless setup); 'random-isometry' orthonormalizes a
    complex Gaussian L x K matrix.  All randomness flows from `seed`; the
    result is bit-reproducible given (L, K, N, b_type, seed).
    """
    L, K, N = int(L), int(K), int(N)
    if not (1 <= K <= L) or N < 1:
        raise InvalidInputError(f"need 1 <= K <= L and N >= 1, got L={L} K={K} N={N}")
    if b_type not in B_TYPES:
        raise InvalidInputError(f"unknown b_type {b_type!r}; choose from {B_TYPES}")
    rng = np.random.default_rng(seed)
    if b_type == "identity-columns":
        B = np.zeros((L, K), dtype=complex)
        B[:K, :K] = np.eye(K)
    else:
        G = complex_gaussian(rng, (L, K))
        B, R = np.linalg.qr(G)
        # fix column phases so the factorization is unique
        d = np.diagonal(R).copy()
        d[d == 0] = 1.0
        B = B * (d / np.abs(d)).conj()
    C = complex_gaussian(rng, (L, N), scale=1.0 / np.sqrt(L))
    b_rows = np.conj(np.fft.fft(B, axis=0) / np.sqrt(L))
    c_rows = np.fft.fft(C, axis=0)  # = sqrt(L) * (unitary DFT of C)
    return SubspaceModel(L=L, K=K, N=N, b_type=b_type, seed=int(seed),
                         B=B, C=C, b_rows=b_rows, c_rows=c_rows)


def _check_matrix(model, X):
    X = np.asarray(X, dtype=complex)
    if X.shape != (model.K, model.N):
        raise InvalidInputError(
            f"matrix shape {X.shape} does not match model ({model.K}, {model.N})"
        )
    return X


def _check_vector(model, z):
    z = np.asarray(z, dtype=complex)
    if z.shape != (model.L,):
        raise InvalidInputError(f"vector shape {z.shape} does not match L={model.L}")
    return z


def apply_A(model, X):
    """Forward map: entry l is b_l^* X c_l."""
    X = _check_matrix(model, X)
    return ((model.b_rows.conj() @ X) * model.c_rows).sum(axis=1)


def apply_A_rank1(model, h, m):
    """Fast path for rank-1 inputs X = h m^*, via FFTs of Bh and C conj(m).

    Equals the DFT of the circular convolution of w = Bh and x = C conj(m).
    """
    h = np.asarray(h, dtype=complex)
    m = np.asarray(m, dtype=complex)
    if h.shape != (model.K,) or m.shape != (model.N,):
        raise InvalidInputError("rank-1 factor dimensions do not match model")
    w = model.B @ h
    x = model.C @ m.conj()
    return np.fft.fft(w) * np.fft.fft(x) / np.sqrt(model.L)


def apply_A_adjoint(model, z):
    """Adjoint map: sum_l z_l b_l c_l^* as a K x N matrix."""
    z = _check_vector(model, z)
    return (model.b_rows.T * z) @ model.c_rows.conj()


def convolve_oracle(w, x):
    """Direct O(L^2) circular convolution, index arithmetic modulo L."""
    w = np.asarray(w, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if w.ndim != 1 or w.shape != x.shape:
        raise InvalidInputError("convolve_oracle needs two equal-length vectors")
    L = len(w)
    idx = (np.arange(L)[:, None] - np.arange(L)[None, :]) % L
    return x[idx] @ w


def coherence_mu_max(model):
    """mu^2_max = (L/K) max_l ||b_l||^2; lies in [1, L/K]."""
    norms = np.sum(np.abs(model.b_rows) ** 2, axis=1)
    return float(model.L / model.K * norms.max())


def coherence_mu_h0(model, h0):
    """mu^2_h0 = (L/||h0||^2) max_l |<b_l, h0>|^2; lies in [1, K mu^2_max]."""
    h0 = np.asarray(h0, dtype=complex)
    if h0.shape != (model.K,):
        raise InvalidInputError("h0 dimension does not match model")
    n2 = float(np.sum(np.abs(h0) ** 2))
    if n2 == 0.0:
        raise InvalidInputError("h0 must be nonzero")
    corr = model.b_rows.conj() @ h0
    return float(model.L / n2 * np.max(np.abs(corr) ** 2))


def opnorm_bound(model, omega):
    """Analytic high-probability bound on the operator norm of A.

    zeta = 2 sqrt(omega * max(1, mu_max*K*N/L) * log(L + K*N)) with
    mu_max the square root of coherence_mu_max.
    """
    if omega < 1:
        raise InvalidInputError("omega must be >= 1")
    mu_max = np.sqrt(coherence_mu_max(model))
    inner = max(1.0, mu_max * model.K * model.N / model.L)
    return float(2.0 * np.sqrt(omega * inner * np.log(model.L + model.K * model.N)))


@dataclass
class MeasurementSet:
    """Observed vector y with noise level tau and (optionally) the noise."""

    y: np.ndarray
    tau: float
    e: np.ndarray = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=complex)
        self.tau = float(self.tau)
        if self.tau < 0:
            raise InvalidInputError("tau must be nonnegative")
        if self.e is not None:
            self.e = np.asarray(self.e, dtype=complex)
            if self.e.shape != self.y.shape:
                raise InvalidInputError("noise vector shape does not match y")
            if np.linalg.norm(self.e) > self.tau * (1 + 1e-9):
                raise InvalidInputError("||e||_2 exceeds the declared noise level tau")


def measure(model, truth, e=None, tau=0.0):
    """Assemble y = A(X0) + e for a GroundTruth, keeping the realized noise."""
    clean = apply_A(model, truth.lifted())
    if e is None:
        return MeasurementSet(y=clean, tau=float(tau))
    e = _check_vector(model, e)
    tau = max(float(tau), float(np.linalg.norm(e)))
    return MeasurementSet(y=clean + e, tau=tau, e=e)


def _encode_c64(arr):
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<c8").tobytes()).decode("ascii")


def _decode_c64(text, shape):
    flat = np.frombuffer(base64.b64decode(text.encode("ascii")), dtype="<c8")
    return flat.reshape(shape)


def model_to_json(model):
    """Serialize a model to a JSON document (string).

    B and C are stored as base64 little-endian complex64 for inspection and
    integrity checking; loading reconstructs the model bit-exactly from
    (dims, b_type, seed) and validates it against the stored arrays.
    """
    doc = {
        "L": model.L,
        "K": model.K,
        "N": model.N,
        "b_type": model.b_type,
        "seed": model.seed,
        "B": _encode_c64(model.B),
        "C": _encode_c64(model.C),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def model_from_json(text):
    """Rebuild a model from its JSON document; round-trip is bit-exact."""
    doc = json.loads(text)
    required = {"L", "K", "N", "b_type", "seed", "B", "C"}
    missing = required - doc.keys()
    if missing:
        raise InvalidInputError(f"model document missing keys: {sorted(missing)}")
    model = build_model(doc["L"], doc["K"], doc["N"], doc["b_type"], doc["seed"])
    stored_B = _decode_c64(doc["B"], (model.L, model.K))
    stored_C = _decode_c64(doc["C"], (model.L, model.N))
    if not (np.array_equal(stored_B, model.B.astype("<c8"))
            and np.array_equal(stored_C, model.C.astype("<c8"))):
        raise InvalidInputError(
            "stored arrays disagree with the model rebuilt from (dims, b_type, seed)"
        )
    return model
