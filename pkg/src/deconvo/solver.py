"""Constrained nuclear-norm minimization via primal-dual proximal splitting.

Solves   minimize ||X||_*  subject to  ||A(X) - y||_2 <= tau
with an overrelaxed Chambolle-Pock iteration: the primal prox is
singular-value soft-thresholding, the dual prox is (via Moreau) the
projection of the residual onto the l2 ball of radius tau.  Step sizes
come from a power-iteration estimate of ||A|| so that the product of
primal and dual steps times ||A||^2 equals step_scale <= 1.

Initialization is X = 0 with a zero dual variable, so runs are
deterministic given (inputs, options); the seed only feeds the power
iteration start vector.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model import complex_gaussian

_TINY = 1e-300


@dataclass
class SolveOptions:
    """Iteration limits, tolerances, and step-size shape.

    tol_feasibility None means 1e-8 * ||y||_2, resolved at solve time.
    step_balance skews the primal/dual step split (primal step is
    step_balance * sqrt(step_scale) / ||A||); small values favor fast
    feasibility and empirically dominate on low-noise instances.
    """

    max_iters: int = 100000
    tol_rel_change: float = 1e-7
    tol_feasibility: float = None
    step_scale: float = 0.99
    step_balance: float = 0.05
    overrelax: float = 1.9
    check_every: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.tol_rel_change <= 0:
            raise InvalidInputError("tol_rel_change must be positive")
        if self.tol_feasibility is not None and self.tol_feasibility <= 0:
            raise InvalidInputError("tol_feasibility must be positive")
        if not (0.0 < self.step_scale <= 1.0):
            raise InvalidInputError("step_scale must lie in (0, 1]")
        if self.step_balance <= 0:
            raise InvalidInputError("step_balance must be positive")
        if not (0.0 < self.overrelax < 2.0):
            raise InvalidInputError("overrelax must lie in (0, 2)")


@dataclass
class SolveReport:
    """Solution matrix with convergence diagnostics."""

    X_star: np.ndarray
    iterations: int
    feasibility_gap: float
    objective: float
    converged: bool
    residual_history: list = field(default_factory=list)
    tau: float = 0.0

    def summary(self, with_matrix=False):
        doc = {
            "iterations": self.iterations,
            "feasibility_gap": self.feasibility_gap,
            "objective": self.objective,
            "converged": self.converged,
            "tau": self.tau,
            "residual_history": list(self.residual_history),
        }
        if with_matrix:
            doc["X_star_real"] = self.X_star.real.tolist()
            doc["X_star_imag"] = self.X_star.imag.tolist()
        return doc


def power_opnorm(model, iters, seed):
    """Operator-norm estimate from `iters` applications of A^*A.

    Krylov (Lanczos) realization of the power-iteration estimate: the top
    Ritz value of A^*A on span{v, (A^*A)v, ..., (A^*A)^iters v} from a
    seeded random start.  Nested Krylov subspaces make the estimate
    nondecreasing in the iteration count; 20 iterations settle it to
    ~1e-6 relative at desk dimensions.
    """
    if iters < 1:
        raise InvalidInputError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    brows_c = model.b_rows.conj()
    crows_c = model.c_rows.conj()

    def op(M):
        z = ((brows_c @ M) * model.c_rows).sum(axis=1)
        return (model.b_rows.T * z) @ crows_c

    v = complex_gaussian(rng, (model.K, model.N))
    v /= max(np.linalg.norm(v), _TINY)
    dim = model.K * model.N
    steps = min(iters, dim)
    V = [v]
    alphas, betas = [], []
    w = op(v)
    a = float(np.vdot(v, w).real)
    alphas.append(a)
    w = w - a * v
    for _ in range(steps - 1):
        # full reorthogonalization keeps the small problem numerically exact
        for u in V:
            w = w - np.vdot(u, w) * u
        b = float(np.linalg.norm(w))
        if b <= 1e-14 * max(1.0, max(abs(x) for x in alphas)):
            break
        v_next = w / b
        betas.append(b)
        V.append(v_next)
        w = op(v_next)
        a = float(np.vdot(v_next, w).real)
        alphas.append(a)
        w = w - a * v_next - b * V[-2]
    T = np.diag(alphas)
    if betas:
        off = np.array(betas)
        T = T + np.diag(off, 1) + np.diag(off, -1)
    top = float(np.linalg.eigvalsh(T)[-1])
    return float(np.sqrt(max(top, 0.0)))


def svt(X, lam):
    """Singular-value soft-thresholding (prox of lam * nuclear norm)."""
    if lam < 0:
        raise InvalidInputError("lambda must be nonnegative")
    X = np.asarray(X, dtype=complex)
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    return (U * np.maximum(s - lam, 0.0)) @ Vh


def solve_constrained(model, y, tau, opts=None):
    """Minimize the nuclear norm over the tau-ball around y.

    Non-convergence within max_iters is reported (converged=False), never
    silently wrong; tau = 0 is replaced by tol_feasibility / 10 to keep
    the ball projection well-defined.
    """
    if opts is None:
        opts = SolveOptions()
    y = np.asarray(y, dtype=complex)
    if y.shape != (model.L,):
        raise InvalidInputError(f"y has shape {y.shape}, expected ({model.L},)")
    tau = float(tau)
    if tau < 0:
        raise InvalidInputError("tau must be nonnegative")
    y_norm = float(np.linalg.norm(y))
    tol_feas = opts.tol_feasibility if opts.tol_feasibility is not None else 1e-8 * y_norm
    if tau == 0.0:
        tau = tol_feas / 10.0

    a_est = max(power_opnorm(model, iters=30, seed=opts.seed), _TINY)
    sp = opts.step_balance * np.sqrt(opts.step_scale) / a_est
    sd = np.sqrt(opts.step_scale) / (opts.step_balance * a_est)
    rho = opts.overrelax

    brows_c = model.b_rows.conj()
    brows_t = model.b_rows.T
    crows = model.c_rows
    crows_c = model.c_rows.conj()

    def forward(M):
        return ((brows_c @ M) * crows).sum(axis=1)

    X = np.zeros((model.K, model.N), dtype=complex)
    q = np.zeros(model.L, dtype=complex)
    history = []
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        W = X - sp * ((brows_t * q) @ crows_c)
        U, s, Vh = np.linalg.svd(W, full_matrices=False)
        Xt = (U * np.maximum(s - sp, 0.0)) @ Vh
        v = q + sd * forward(2.0 * Xt - X)
        u = v / sd - y
        nu_ = np.linalg.norm(u)
        scale = min(1.0, tau / nu_) if nu_ > 0 else 0.0
        qt = v - sd * (y + u * scale)
        Xn = X + rho * (Xt - X)
        qn = q + rho * (qt - q)
        dX = np.linalg.norm(Xn - X)
        X, q = Xn, qn
        if it % opts.check_every == 0 or it == opts.max_iters:
            nX = max(np.linalg.norm(X), _TINY)
            rel = dX / nX
            history.append(float(rel))
            gap = max(0.0, float(np.linalg.norm(forward(X) - y)) - tau)
            if rel <= opts.tol_rel_change and gap <= tol_feas:
                converged = True
                break
    gap = max(0.0, float(np.linalg.norm(forward(X) - y)) - tau)
    objective = float(np.linalg.svd(X, compute_uv=False).sum())
    return SolveReport(X_star=X, iterations=it, feasibility_gap=gap,
                       objective=objective, converged=converged,
                       residual_history=history, tau=tau)


def solve_noiseless(model, y, opts=None):
    """Equality-constrained program, run as a tiny-ball instance."""
    if opts is None:
        opts = SolveOptions()
    y = np.asarray(y, dtype=complex)
    tol_feas = (opts.tol_feasibility if opts.tol_feasibility is not None
                else 1e-8 * float(np.linalg.norm(y)))
    return solve_constrained(model, y, tol_feas / 10.0, opts)
