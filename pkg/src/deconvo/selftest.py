"""Fast invariant suite over tiny dimensions (L=32, K=N=4).

Each check prints one pass/fail line; run via `deconvo selftest`.
"""

import numpy as np

from . import certify, geometry, solver
from .model import (GroundTruth, apply_A, apply_A_adjoint, apply_A_rank1,
                    build_model, complex_gaussian, convolve_oracle,
                    coherence_mu_h0, coherence_mu_max, model_from_json,
                    model_to_json, opnorm_bound)

L, K, N = 32, 4, 4


def _checks():
    m = build_model(L, K, N, "identity-columns", seed=11)
    rng = np.random.default_rng(5)
    truth = GroundTruth.random(K, N, seed=21)
    ts = geometry.TangentSpace(truth.h0, truth.m0)
    X = complex_gaussian(rng, (K, N))
    z = complex_gaussian(rng, L)

    yield ("model determinism",
           model_to_json(build_model(L, K, N, "identity-columns", 11)) == model_to_json(m))
    yield ("model json round-trip",
           np.array_equal(model_from_json(model_to_json(m)).C, m.C))

    lhs = np.vdot(apply_A(m, X), z)
    rhs = np.vdot(X, apply_A_adjoint(m, z))
    yield ("adjoint identity",
           abs(lhs - rhs) <= 1e-10 * np.linalg.norm(X) * np.linalg.norm(z))

    w = m.B @ truth.h0
    x = m.C @ truth.m0.conj()
    conv = np.fft.fft(convolve_oracle(w, x)) / np.sqrt(L)
    fast = apply_A_rank1(m, truth.h0, truth.m0)
    gen = apply_A(m, np.outer(truth.h0, truth.m0.conj()))
    yield ("convolution oracle equivalence",
           np.linalg.norm(conv - gen) <= 1e-8 * np.linalg.norm(gen))
    yield ("rank-1 fast path", np.linalg.norm(fast - gen) <= 1e-10 * np.linalg.norm(gen))

    mu2 = coherence_mu_max(m)
    mu2h = coherence_mu_h0(m, truth.h0)
    yield ("coherence ranges",
           1 - 1e-12 <= mu2 <= L / K + 1e-12 and 1 - 1e-12 <= mu2h <= K * mu2 + 1e-9)

    P1 = geometry.project_T(ts, X)
    P2 = geometry.project_Tperp(ts, X)
    yield ("projection algebra",
           np.linalg.norm(geometry.project_T(ts, P1) - P1) <= 1e-12 * np.linalg.norm(X)
           and np.linalg.norm(P1 + P2 - X) <= 1e-12 * np.linalg.norm(X)
           and abs(np.vdot(P1, P2)) <= 1e-12 * np.linalg.norm(X) ** 2)

    Z = geometry.sample_descent_cone(ts, seed=3, mix="uniform")
    dec = geometry.decompose_descent(ts, Z)
    member, margin = geometry.is_descent_direction(ts, Z)
    yield ("descent sample membership", member and margin >= -1e-10)
    yield ("decomposition reassembly",
           np.linalg.norm(dec.reassemble(ts) - Z) <= 1e-10)
    yield ("orthogonal norm split",
           abs(dec.beta**2 + dec.iota**2 + dec.gamma**2 + dec.eta**2
               + dec.m_frobenius**2 - 1.0) <= 1e-10)

    a, b, c = 1.3, -0.4, 2.2
    closed = geometry.nuclear_norm_2x2(a, b, c)
    svd_val = geometry.nuclear_norm(np.array([[a, b], [c, 0.0]]))
    yield ("2x2 nuclear closed form", abs(closed - svd_val) <= 1e-12)

    Xd = np.diag([3.0, 1.0, 0.5, 0.1])[:K, :N]
    yield ("svt shrinkage",
           np.allclose(solver.svt(Xd, 2.0), np.diag([1.0, 0, 0, 0])[:K, :N]))

    part = certify.build_partition(m, P=1, alpha_target=1e-6, max_tries=1, seed=0)
    yield ("single-block partition exact", part.alpha <= 1e-10)
    cert = certify.golfing(m, part, truth.h0, truth.m0)
    yield ("golfing consistency",
           np.linalg.norm(cert.Y - apply_A_adjoint(m, cert.z))
           <= 1e-10 * max(1.0, np.linalg.norm(cert.Y)))
    exact = certify.exactify(m, ts, cert)
    yield ("exactify tangent residual", exact.tangent_residual <= 1e-8)
    yield ("exactify norm growth", exact.z_norm <= cert.z_norm + 1 + 1e-9)

    d1 = certify.rip_delta_on_T(m, ts)
    d2 = certify.rip_delta_on_T_dense(m, ts)
    yield ("rip evaluations agree", abs(d1 - d2) <= 1e-10)

    y = apply_A(m, truth.lifted())
    rep = solver.solve_noiseless(m, y)
    yield ("noiseless recovery",
           rep.converged and np.linalg.norm(rep.X_star - truth.lifted()) <= 1e-4)

    est = solver.power_opnorm(m, iters=20, seed=1)
    yield ("opnorm within analytic bound", est <= opnorm_bound(m, 1.0))


def run_selftest(quiet=False):
    ok = True
    for name, passed in _checks():
        ok = ok and bool(passed)
        if not quiet:
            print(f"[{'pass' if passed else 'FAIL'}] {name}")
    if not quiet:
        print("selftest:", "all checks passed" if ok else "FAILURES detected")
    return ok
