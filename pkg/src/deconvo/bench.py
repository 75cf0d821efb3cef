"""Noise-scaling experiment harness: instance generation, sweeps, reports.

A sweep solves the constrained program across a grid of noise levels and
seeds, records the reconstruction error against the theoretical envelope
max{ (log(omega L))^{1/4} sqrt(nu tau), sqrt(log(omega L)) tau }, and the
descent decomposition of each realized error direction.  Records
serialize to CSV with a fixed column order; summaries (medians per tau,
fitted slope, bound ratios) go to JSON.  All outputs are byte-reproducible
given identical config and seeds.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .errors import InvalidInputError
from .geometry import TangentSpace, decompose_descent, first_orthogonal_unit
from .model import GroundTruth, apply_A, apply_A_adjoint, build_model, complex_gaussian
from .solver import SolveOptions, solve_constrained

NOISE_MODES = ("random", "tangent-aligned", "cancel", "greedy-adversarial")

CSV_COLUMNS = ("seed", "L", "K", "N", "b_type", "omega", "noise_mode", "tau",
               "nu", "error", "bound", "beta", "gamma", "eta", "m_nuclear",
               "objective", "feasibility_gap", "iterations", "converged")

_PILOT_OPTS = SolveOptions(max_iters=2000, tol_rel_change=1e-5, check_every=50)


def derive_seed(*parts):
    """Deterministic 64-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts))
               .generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentConfig:
    """Sweep definition: dims, noise, tau grid (as fractions of nu), seeds."""

    L: int = 512
    K: int = 16
    N: int = 16
    b_type: str = "identity-columns"
    omega: float = 1.0
    tau_grid: list = field(default_factory=lambda: [1e-3, 3e-3, 1e-2, 3e-2, 1e-1])
    noise_mode: str = "random"
    n_seeds: int = 20
    nu: float = 1.0
    master_seed: int = 0
    solver: SolveOptions = field(default_factory=SolveOptions)
    out: str = None

    def __post_init__(self):
        if self.noise_mode not in NOISE_MODES:
            raise InvalidInputError(
                f"unknown noise_mode {self.noise_mode!r}; choose from {NOISE_MODES}")
        if self.n_seeds < 1:
            raise InvalidInputError("n_seeds must be >= 1")
        taus = list(self.tau_grid)
        if any(t <= 0 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
            raise InvalidInputError("tau_grid must be positive and strictly increasing")

    @classmethod
    def from_dict(cls, doc):
        """Strict construction: unknown keys are rejected by name."""
        known = {f.name for f in dc_fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidInputError(f"unknown config key(s): {sorted(unknown)}")
        doc = dict(doc)
        if "solver" in doc and isinstance(doc["solver"], dict):
            sol_known = {f.name for f in dc_fields(SolveOptions)}
            sol_unknown = set(doc["solver"]) - sol_known
            if sol_unknown:
                raise InvalidInputError(
                    f"unknown solver option(s): {sorted(sol_unknown)}")
            doc["solver"] = SolveOptions(**doc["solver"])
        return cls(**doc)


@dataclass
class SweepRecord:
    """One (seed, tau) cell of a sweep; field order matches the CSV schema."""

    seed: int
    L: int
    K: int
    N: int
    b_type: str
    omega: float
    noise_mode: str
    tau: float
    nu: float
    error: float
    bound: float
    beta: float
    gamma: float
    eta: float
    m_nuclear: float
    objective: float
    feasibility_gap: float
    iterations: int
    converged: bool

    def csv_row(self):
        vals = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if isinstance(v, bool):
                vals.append("true" if v else "false")
            elif isinstance(v, float):
                vals.append(repr(v))
            else:
                vals.append(str(v))
        return ",".join(vals)


def error_bound(L, omega, nu, tau):
    """max{ (log(omega L))^{1/4} sqrt(nu tau), sqrt(log(omega L)) tau }."""
    logterm = np.log(omega * L)
    return float(max(logterm ** 0.25 * np.sqrt(nu * tau), np.sqrt(logterm) * tau))


def _rank1_factors(X0):
    U, s, Vh = np.linalg.svd(X0, full_matrices=False)
    return U[:, 0], Vh[0].conj()


def _normalized(v):
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidInputError("zero noise direction")
    return v / n


def _greedy_dictionary(model, X0, seed):
    """Candidate unit noise directions for the greedy-adversarial mode."""
    h0, m0 = _rank1_factors(X0)
    dirs = [_normalized(-apply_A(model, X0))]
    m0p = first_orthogonal_unit(m0) if model.N > 1 else None
    h0p = first_orthogonal_unit(h0) if model.K > 1 else None
    if m0p is not None:
        dirs.append(_normalized(apply_A(model, np.outer(h0, m0p.conj()))))
    if h0p is not None:
        dirs.append(_normalized(apply_A(model, np.outer(h0p, m0.conj()))))
    if m0p is not None and h0p is not None:
        combo = np.outer(h0, m0p.conj()) + np.outer(h0p, m0.conj())
        dirs.append(_normalized(apply_A(model, combo)))
        dirs.append(_normalized(apply_A(model, np.outer(h0p, m0p.conj()))))
    # direction most amplified by the adjoint: power iteration on A A^*
    rng = np.random.default_rng(seed)
    u = complex_gaussian(rng, model.L)
    for _ in range(15):
        u = apply_A(model, apply_A_adjoint(model, u))
        u /= np.linalg.norm(u)
    dirs.append(u)
    dirs.append(_normalized(complex_gaussian(rng, model.L)))
    return dirs


def make_noise(model, X0, tau, mode, seed):
    """Noise vector with ||e||_2 = tau exactly, synthesized per mode.

    random: uniform direction on the sphere; tangent-aligned: image of the
    h0 m0perp^* tangent direction; cancel: -tau A(X0)/||A(X0)||; greedy:
    best direction from a finite dictionary under a pilot solve.
    """
    X0 = np.asarray(X0, dtype=complex)
    tau = float(tau)
    if tau < 0:
        raise InvalidInputError("tau must be nonnegative")
    if mode not in NOISE_MODES:
        raise InvalidInputError(f"unknown noise mode {mode!r}; choose from {NOISE_MODES}")
    if tau == 0.0:
        return np.zeros(model.L, dtype=complex)
    if mode == "random":
        return tau * _normalized(complex_gaussian(np.random.default_rng(seed), model.L))
    if mode == "cancel":
        return -tau * _normalized(apply_A(model, X0))
    if mode == "tangent-aligned":
        h0, m0 = _rank1_factors(X0)
        if model.N > 1:
            aligned = np.outer(h0, first_orthogonal_unit(m0).conj())
        else:
            aligned = np.outer(first_orthogonal_unit(h0), m0.conj())
        return tau * _normalized(apply_A(model, aligned))
    # greedy-adversarial: pilot-solve each dictionary direction
    y_clean = apply_A(model, X0)
    best_err, best_dir = -1.0, None
    for d in _greedy_dictionary(model, X0, seed):
        rep = solve_constrained(model, y_clean + tau * d, tau, _PILOT_OPTS)
        err = float(np.linalg.norm(rep.X_star - X0))
        if err > best_err:
            best_err, best_dir = err, d
    return tau * best_dir


def run_cell(config, i_seed, i_tau):
    """Generate, solve, and record one (seed, tau) cell; deterministic."""
    mode_idx = NOISE_MODES.index(config.noise_mode)
    model_seed = derive_seed(config.master_seed, i_seed, 0)
    gt_seed = derive_seed(config.master_seed, i_seed, 1)
    noise_seed = derive_seed(config.master_seed, i_seed, 2, i_tau, mode_idx)
    model = build_model(config.L, config.K, config.N, config.b_type, model_seed)
    truth = GroundTruth.random(config.K, config.N, gt_seed, nu=config.nu)
    X0 = truth.lifted()
    tau = float(config.tau_grid[i_tau]) * config.nu
    e = make_noise(model, X0, tau, config.noise_mode, noise_seed)
    y = apply_A(model, X0) + e
    rep = solve_constrained(model, y, tau, config.solver)
    err = float(np.linalg.norm(rep.X_star - X0))
    beta = gamma = eta = m_nuc = 0.0
    if err > 1e-12 * config.nu:
        ts = TangentSpace(truth.h0, truth.m0)
        dec = decompose_descent(ts, (rep.X_star - X0) / err)
        beta, gamma, eta, m_nuc = dec.beta, dec.gamma, dec.eta, dec.m_nuclear
    return SweepRecord(
        seed=model_seed, L=config.L, K=config.K, N=config.N,
        b_type=config.b_type, omega=config.omega, noise_mode=config.noise_mode,
        tau=tau, nu=config.nu, error=err,
        bound=error_bound(config.L, config.omega, config.nu, tau),
        beta=beta, gamma=gamma, eta=eta, m_nuclear=m_nuc,
        objective=rep.objective, feasibility_gap=rep.feasibility_gap,
        iterations=rep.iterations, converged=rep.converged,
    )


def sweep_tau(config, threads=1):
    """Run every (seed, tau) cell of the sweep; order-independent results."""
    cells = [(i_s, i_t) for i_s in range(config.n_seeds)
             for i_t in range(len(config.tau_grid))]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: run_cell(config, *c), cells))
    else:
        records = [run_cell(config, *c) for c in cells]
    records.sort(key=lambda r: (r.seed, r.tau))
    return records


def fit_slope(records, tau_min, tau_max):
    """Log-log slope of median error against tau over converged records."""
    by_tau = {}
    for r in records:
        if r.converged and tau_min <= r.tau <= tau_max and r.error > 0:
            by_tau.setdefault(r.tau, []).append(r.error)
    if len(by_tau) < 3:
        raise InvalidInputError(
            f"need >= 3 distinct tau values in range, got {len(by_tau)}")
    taus = np.array(sorted(by_tau))
    med = np.array([np.median(by_tau[t]) for t in taus])
    slope, _ = np.polyfit(np.log(taus), np.log(med), 1)
    return float(slope)


def records_to_csv_bytes(records):
    lines = [",".join(CSV_COLUMNS)]
    lines.extend(r.csv_row() for r in records)
    return ("\n".join(lines) + "\n").encode("ascii")


def summarize(records):
    """Medians per tau, slope (when fittable), and bound-ratio statistics."""
    conv = [r for r in records if r.converged]
    by_tau = {}
    for r in conv:
        by_tau.setdefault(r.tau, []).append(r.error)
    medians = {repr(t): float(np.median(v)) for t, v in sorted(by_tau.items())}
    ratios = [r.error / r.bound for r in conv if r.bound > 0]
    taus = sorted(by_tau)
    slope = None
    if len(taus) >= 3:
        slope = fit_slope(conv, taus[0], taus[-1])
    return {
        "n_records": len(records),
        "n_converged": len(conv),
        "n_flagged": len(records) - len(conv),
        "median_error_by_tau": medians,
        "slope": slope,
        "bound_ratio": {
            "max": max(ratios) if ratios else None,
            "median": float(np.median(ratios)) if ratios else None,
        },
    }


def emit_report(records, path):
    """Write records.csv and summary.json under `path`; returns file paths."""
    if not records:
        raise InvalidInputError("no records to report")
    os.makedirs(path, exist_ok=True)
    csv_path = os.path.join(path, "records.csv")
    json_path = os.path.join(path, "summary.json")
    try:
        with open(csv_path, "wb") as fh:
            fh.write(records_to_csv_bytes(records))
        with open(json_path, "w", encoding="ascii") as fh:
            json.dump(summarize(records), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise InvalidInputError(f"cannot write report under {path!r}: {exc}")
    return [csv_path, json_path]
