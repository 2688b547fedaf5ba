"""Monte Carlo harness: Type-I error, power, shift-recovery rate, tail bounds, LoFT.

Every experiment is a pure function of (spec, seed).  Replicate r of cell c
draws from ``default_rng(SeedSequence(entropy=spec.seed, spawn_key=(c, r)))``,
so serial and parallel executions aggregate the same replicate values and any
worker count reproduces the same output bytes.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from . import loft as loft_mod
from .adaptive import AdaptiveConfig, critical_value
from .spectral import (
    DEFAULT_QUADRATURE_GRID,
    SignalSpec,
    SpectralSignal,
    heavisine_coeffs,
    heavisine_smoothed_coeffs,
    perturbation_coeffs,
)
from .testing import _max_profile, _max_profile_batch, norm_cdf, threshold
from .weights import WeightSequence, pinsker_weights, projection_weights, tikhonov_weights

__all__ = [
    "ExperimentSpec",
    "ReplicateRecord",
    "TailBoundCase",
    "DEFAULT_TAIL_BATTERY",
    "run_type1_known",
    "run_type1_adaptive",
    "run_power",
    "run_tau_rate",
    "run_tail_bounds",
    "run_loft_eval",
    "emit_csv",
    "load_csv",
    "emit_svg_plot",
]

EXPERIMENT_KINDS = (
    "type1_known",
    "type1_adaptive",
    "power_smooth_cos",
    "power_smooth_rational",
    "power_nonsmooth",
    "power_adaptive",
    "loft_eval",
    "tail_bounds",
    "tau_rate",
)

WEIGHT_FAMILIES = ("projection", "tikhonov", "pinsker")

# ladders from the simulation protocols: n_k = 20 * 2^k for the Type-I study,
# n = 2^k (known sigma) and 10 * 2^k (adaptive) for the power study
TYPE1_N_LADDER = tuple(20 * 2**k for k in range(1, 16))
POWER_N_LADDER = tuple(2**k for k in range(1, 5))
POWER_ADAPTIVE_N_LADDER = tuple(10 * 2**k for k in range(1, 5))
POWER_GAMMA_LADDER = tuple(round(0.1 * ell, 10) for ell in range(1, 16))


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run and at which scale; all randomness flows from ``seed``."""

    kind: str
    reps: int = 10_000
    n_ladder: tuple = ()
    gamma_ladder: tuple = ()
    sigma_ladder: tuple = ()
    alpha: float = 0.05
    seed: int = 0
    weight_families: tuple = WEIGHT_FAMILIES
    signal: str = "heavisine_smoothed"
    signal_length: int = 100_000
    with_shift: bool = False
    grid_oversampling: int = 8
    refine_tol: float = 1e-12

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        for fam in self.weight_families:
            if fam not in WEIGHT_FAMILIES:
                raise ValueError(f"unknown weight family {fam!r}")
        if self.signal not in ("heavisine_smoothed", "heavisine"):
            raise ValueError(f"unknown signal {self.signal!r}")


@dataclass(frozen=True)
class ReplicateRecord:
    """Per-replicate trace; a deterministic function of (spec.seed, cell, index)."""

    index: int
    statistic: float
    decision: bool
    tau_hat: float
    p_value: float


@dataclass(frozen=True)
class TailBoundCase:
    """One Monte Carlo check of a printed tail inequality."""

    lemma: str
    s: tuple
    x: float = 0.0
    y: float = 0.0
    label: str = ""


def _geom(j):
    return tuple(float(v) for v in j)


DEFAULT_TAIL_BATTERY = (
    TailBoundCase("lemma2", _geom(np.ones(4)), x=3.0, label="L2 N=4 flat x=3"),
    TailBoundCase("lemma2", _geom(1.0 / np.sqrt(np.arange(1, 17))), x=2.5, label="L2 N=16 decay x=2.5"),
    TailBoundCase("lemma2", _geom(np.ones(4)), x=7.0, label="L2 N=4 flat x=7 (vanishing bound)"),
    TailBoundCase("lemma3", _geom(np.ones(4)), x=3.0, y=3.0, label="L3 N=4 flat x=y=3"),
    TailBoundCase("lemma3", _geom(1.0 / np.arange(1, 9)), x=2.5, y=2.5, label="L3 N=8 decay x=y=2.5"),
    TailBoundCase("lemma4", (1.0,), y=2.0, label="L4 single coordinate y=2"),
    TailBoundCase("lemma4", (1.0, 0.8, 0.6, 0.5, 0.4, 0.3), y=2.5, label="L4 N=6 mixed y=2.5"),
    TailBoundCase("prop2", _geom(np.ones(4)), x=2.5, label="P2 N=4 flat x=2.5"),
    TailBoundCase("prop2", _geom(1.0 / np.arange(1, 9)), x=3.0, label="P2 N=8 decay x=3"),
)


# --------------------------------------------------------------------------
# shared plumbing

def _rep_rng(seed: int, cell: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(cell, rep)))


def _family_weights(name: str, N: int) -> WeightSequence:
    if name == "projection":
        return projection_weights(N)
    if name == "tikhonov":
        return tikhonov_weights(N, 0.5, 2.0)
    if name == "pinsker":
        return pinsker_weights(N, 2.0)
    raise ValueError(f"unknown weight family {name!r}")


def _cutoff(sigma: float) -> int:
    """N = ceil(50 / sqrt(sigma)), the frequency cutoff used by the protocols."""
    return int(math.ceil(50.0 * sigma**-0.5))


@lru_cache(maxsize=8)
def _cached_signal(signal: str, J: int) -> SpectralSignal:
    if signal == "heavisine":
        return heavisine_coeffs(J, grid=_grid_for(J))
    return heavisine_smoothed_coeffs(J, grid=_grid_for(J))


@lru_cache(maxsize=8)
def _cached_unit_perturbation(signal: str, kind: str, J: int) -> np.ndarray:
    """Normalized perturbation coefficients, so f + gamma phi = base + gamma * this."""
    base = _cached_signal(signal, J)
    shifted = perturbation_coeffs(SignalSpec(kind, 1.0, J), base, grid=_grid_for(J))
    return shifted.coeffs[0] - base.coeffs[0]


def _grid_for(J: int) -> int:
    grid = DEFAULT_QUADRATURE_GRID
    while grid < 4 * J:
        grid *= 2
    return grid


def _chunks(reps: int, chunk: int):
    return [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]


def _run_chunks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _binom_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


# --------------------------------------------------------------------------
# Type I, known noise level

def _type1_known_chunk(task):
    (seed, cell, lo, hi, coeffs, sigma, families, alpha, oversampling, tol) = task
    N = coeffs.shape[0]
    R = hi - lo
    jj = np.arange(1, N + 1)
    Y = np.empty((R, N), dtype=complex)
    Ys = np.empty((R, N), dtype=complex)
    for i in range(R):
        rng = _rep_rng(seed, cell, lo + i)
        tau = rng.uniform(0.0, 2.0 * np.pi)
        shifted = np.exp(1j * jj * tau) * coeffs
        Y[i] = coeffs + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
        Ys[i] = shifted + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    prod = Y * np.conj(Ys)
    energy = np.abs(Y) ** 2 + np.abs(Ys) ** 2
    denom = 4.0 * sigma**2
    accepts = {}
    for fam in families:
        w = _family_weights(fam, N)
        m_max, _ = _max_profile_batch(prod * w.nu, oversampling, tol)
        delta = (energy @ w.nu - 2.0 * m_max) / denom
        accepts[fam] = int(np.sum(delta < threshold(w, alpha)))
    return accepts


def run_type1_known(spec: ExperimentSpec, workers: int = 1, chunk: int = 512) -> list[dict]:
    """Acceptance proportions under the shifted null, one row per (n, family).

    Per replicate: tau* ~ U[0, 2 pi); Y_j = c_j + sigma xi_j and
    Y_j^# = e^{i j tau*} c_j + sigma xi_j^# for j = 1..N with
    sigma = n^{-1/2} and N = ceil(50 sigma^{-1/2}); the level-alpha test
    compares Delta with ||nu||_1 + z_{1-alpha} ||nu||_2 for each family.
    """
    ladder = spec.n_ladder or TYPE1_N_LADDER
    max_N = _cutoff(max(ladder) ** -0.5)
    signal = _cached_signal(spec.signal, max(spec.signal_length, max_N))
    rows = []
    for cell, n in enumerate(ladder):
        sigma = float(n) ** -0.5
        N = _cutoff(sigma)
        coeffs = signal.coeffs[0, :N]
        tasks = [
            (spec.seed, cell, lo, hi, coeffs, sigma, tuple(spec.weight_families),
             spec.alpha, spec.grid_oversampling, spec.refine_tol)
            for lo, hi in _chunks(spec.reps, chunk)
        ]
        counts = {fam: 0 for fam in spec.weight_families}
        for res in _run_chunks(_type1_known_chunk, tasks, workers):
            for fam, c in res.items():
                counts[fam] += c
        for fam in spec.weight_families:
            p = counts[fam] / spec.reps
            rows.append({
                "n": n, "N": N, "sigma": sigma, "family": fam,
                "reps": spec.reps, "accept": p, "se": _binom_se(p, spec.reps),
            })
    return rows


# --------------------------------------------------------------------------
# Type I, unknown noise level

def _phase_ramp(tau: float, p: int) -> np.ndarray:
    """e^{i j tau} for j = 1..p via a cumulative product (unit-modulus drift ~ p eps)."""
    z = complex(math.cos(tau), math.sin(tau))
    return np.cumprod(np.full(p, z))


def _type1_adaptive_chunk(task):
    (seed, cell, lo, hi, coeffs, n, N, p, families, alpha, oversampling, tol) = task
    R = hi - lo
    prod = np.empty((R, N), dtype=complex)
    head = np.empty((R, N))
    tail = np.empty(R)
    for i in range(R):
        rng = _rep_rng(seed, cell, lo + i)
        s = rng.uniform(1.0, 4.0)
        sigma = s / math.sqrt(n)
        tau = rng.uniform(0.0, 2.0 * np.pi)
        shifted = _phase_ramp(tau, p)
        shifted *= coeffs
        g = rng.standard_normal((4, p))
        # real/imaginary energy without materializing full-band complex arrays
        yr = coeffs.real + sigma * g[0]
        yi = coeffs.imag + sigma * g[1]
        sr = shifted.real + sigma * g[2]
        si = shifted.imag + sigma * g[3]
        energy = yr * yr
        for part in (yi, sr, si):
            energy += part * part
        head[i] = energy[:N]
        tail[i] = float(np.sum(energy[N:]))
        prod[i] = (yr[:N] + 1j * yi[:N]) * (sr[:N] - 1j * si[:N])
    rejects = {}
    for fam in families:
        w = _family_weights(fam, N)
        cfg = AdaptiveConfig(w, p, alpha)
        crit = critical_value(cfg)
        comp_l1 = float(np.sum(1.0 - w.nu)) + (p - N)
        m_max, _ = _max_profile_batch(prod * w.nu, oversampling, tol)
        min_dist = head @ w.nu - 2.0 * m_max
        denom = head @ (1.0 - w.nu) + tail
        delta_tilde = comp_l1 * min_dist / denom
        t = (delta_tilde - w.l1) / w.l2
        rejects[fam] = int(np.sum(t >= crit))
    return rejects


def run_type1_adaptive(spec: ExperimentSpec, workers: int = 1, chunk: int = 512) -> list[dict]:
    """Unknown-noise variant: s ~ U[1, 4], sigma = s/sqrt(n), N = ceil(50 n^{1/4}).

    The observable band holds p = ceil(2 N^{3/2}) coefficients (proportional to
    N^{3/2} and >= 2N).  Rows report acceptance proportions of the critical
    region built from the beta-minimized threshold.
    """
    ladder = spec.n_ladder or TYPE1_N_LADDER
    p_max = max(int(math.ceil(2.0 * _cutoff(float(n) ** -0.5) ** 1.5)) for n in ladder)
    signal = _cached_signal(spec.signal, max(spec.signal_length, p_max))
    rows = []
    for cell, n in enumerate(ladder):
        N = int(math.ceil(50.0 * float(n) ** 0.25))
        p = int(math.ceil(2.0 * N**1.5))
        coeffs = signal.coeffs[0, :p]
        tasks = [
            (spec.seed, cell, lo, hi, coeffs, n, N, p, tuple(spec.weight_families),
             spec.alpha, spec.grid_oversampling, spec.refine_tol)
            for lo, hi in _chunks(spec.reps, chunk)
        ]
        counts = {fam: 0 for fam in spec.weight_families}
        for res in _run_chunks(_type1_adaptive_chunk, tasks, workers):
            for fam, c in res.items():
                counts[fam] += c
        for fam in spec.weight_families:
            rej = counts[fam] / spec.reps
            rows.append({
                "n": n, "N": N, "p": p, "family": fam, "reps": spec.reps,
                "reject": rej, "accept": 1.0 - rej, "se": _binom_se(rej, spec.reps),
            })
    return rows


# --------------------------------------------------------------------------
# power

_POWER_PERTURBATION = {
    "power_smooth_cos": "cos4_perturbation",
    "power_smooth_rational": "rational_perturbation",
    "power_nonsmooth": "rational_unsmoothed",
    "power_adaptive": "cos4_perturbation",
}


def _power_chunk(task):
    (seed, cell, lo, hi, c_base, c_alt, sigma, alpha, with_shift, oversampling, tol) = task
    N = c_base.shape[0]
    R = hi - lo
    jj = np.arange(1, N + 1)
    Y = np.empty((R, N), dtype=complex)
    Ys = np.empty((R, N), dtype=complex)
    for i in range(R):
        rng = _rep_rng(seed, cell, lo + i)
        target = c_alt
        if with_shift:
            tau = rng.uniform(0.0, 2.0 * np.pi)
            target = np.exp(1j * jj * tau) * c_alt
        Y[i] = c_base + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
        Ys[i] = target + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    w = projection_weights(N)
    m_max, _ = _max_profile_batch(Y * np.conj(Ys), oversampling, tol)
    delta = (np.sum(np.abs(Y) ** 2 + np.abs(Ys) ** 2, axis=1) - 2.0 * m_max) / (4.0 * sigma**2)
    return int(np.sum(delta >= threshold(w, alpha)))


def _power_adaptive_chunk(task):
    (seed, cell, lo, hi, c_base, c_alt, n, N, p, alpha, with_shift, oversampling, tol) = task
    R = hi - lo
    w = projection_weights(N)
    cfg = AdaptiveConfig(w, p, alpha)
    crit = critical_value(cfg)
    rejects = 0
    for i in range(R):
        rng = _rep_rng(seed, cell, lo + i)
        s = rng.uniform(1.0, 4.0)
        sigma = s / math.sqrt(n)
        target = c_alt
        if with_shift:
            tau = rng.uniform(0.0, 2.0 * np.pi)
            target = _phase_ramp(tau, p) * c_alt
        g = rng.standard_normal((4, p))
        Y = c_base + sigma * g[0] + (1j * sigma) * g[1]
        Ys = target + sigma * g[2] + (1j * sigma) * g[3]
        prod = Y[:N] * np.conj(Ys[:N])
        m_max, _ = _max_profile(prod, oversampling, tol)
        head = Y.real[:N] ** 2 + Y.imag[:N] ** 2 + Ys.real[:N] ** 2 + Ys.imag[:N] ** 2
        min_dist = float(np.sum(head)) - 2.0 * m_max
        tail = (Y.real[N:] ** 2 + Y.imag[N:] ** 2 + Ys.real[N:] ** 2 + Ys.imag[N:] ** 2)
        delta_tilde = (p - N) * min_dist / float(np.sum(tail))
        rejects += (delta_tilde - N) / math.sqrt(N) >= crit
    return rejects


def run_power(spec: ExperimentSpec, workers: int = 1, chunk: int = 512) -> list[dict]:
    """Rejection proportion against f# = f + gamma phi, one row per (n, gamma).

    Projection weights only.  The perturbation is normalized once per signal
    length so its coefficient norm matches the base signal's; the nonsmooth
    variant multiplies the rational function's j-th coefficient by j before
    normalization.  No shift separates f and f# unless ``spec.with_shift``.
    """
    if spec.kind not in _POWER_PERTURBATION:
        raise ValueError(f"spec.kind {spec.kind!r} is not a power experiment")
    adaptive = spec.kind == "power_adaptive"
    ladder = spec.n_ladder or (POWER_ADAPTIVE_N_LADDER if adaptive else POWER_N_LADDER)
    gammas = spec.gamma_ladder or POWER_GAMMA_LADDER
    J = spec.signal_length
    base = _cached_signal(spec.signal, J)
    phi = _cached_unit_perturbation(spec.signal, _POWER_PERTURBATION[spec.kind], J)
    rows = []
    cell = 0
    for n in ladder:
        sigma = float(n) ** -0.5
        N = _cutoff(sigma)  # ceil(50 n^{1/4}) in both regimes
        take = int(math.ceil(2.0 * N**1.5)) if adaptive else N
        p = take
        for gamma in gammas:
            c_base = base.coeffs[0, :take]
            c_alt = c_base + float(gamma) * phi[:take]
            if adaptive:
                tasks = [
                    (spec.seed, cell, lo, hi, c_base, c_alt, n, N, p, spec.alpha,
                     spec.with_shift, spec.grid_oversampling, spec.refine_tol)
                    for lo, hi in _chunks(spec.reps, chunk)
                ]
                rejects = sum(_run_chunks(_power_adaptive_chunk, tasks, workers))
            else:
                tasks = [
                    (spec.seed, cell, lo, hi, c_base, c_alt, sigma, spec.alpha,
                     spec.with_shift, spec.grid_oversampling, spec.refine_tol)
                    for lo, hi in _chunks(spec.reps, chunk)
                ]
                rejects = sum(_run_chunks(_power_chunk, tasks, workers))
            pw = rejects / spec.reps
            rows.append({
                "n": n, "N": N, "gamma": gamma, "reps": spec.reps,
                "power": pw, "se": _binom_se(pw, spec.reps),
            })
            cell += 1
    return rows


# --------------------------------------------------------------------------
# shift-recovery rate (Proposition-1 style check)

def run_tau_rate(spec: ExperimentSpec, workers: int = 1) -> list[dict]:
    """Median circular error |tau_hat - tau*| along a descending sigma ladder.

    The cutoff N is frozen at the value for the largest sigma so that only the
    noise level varies.  sigma = 0 is allowed: the maximizer of the profile is
    then exact up to refinement tolerance.
    """
    ladder = spec.sigma_ladder or (0.1, 0.025, 0.00625, 0.0015625)
    N = _cutoff(max(s for s in ladder if s > 0))
    signal = _cached_signal(spec.signal, max(spec.signal_length, N))
    coeffs = signal.coeffs[0, :N]
    if abs(coeffs[0]) == 0.0:
        import warnings

        warnings.warn("signal has |c_1| = 0; shift recovery has no guarantees", stacklevel=2)
    jj = np.arange(1, N + 1)
    rows = []
    for cell, sigma in enumerate(ladder):
        errs = np.empty(spec.reps)
        for r in range(spec.reps):
            rng = _rep_rng(spec.seed, cell, r)
            tau = rng.uniform(0.0, 2.0 * np.pi)
            shifted = np.exp(1j * jj * tau) * coeffs
            Y = coeffs + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
            Ys = shifted + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
            _, tau_hat = _max_profile(Y * np.conj(Ys), spec.grid_oversampling, spec.refine_tol)
            errs[r] = abs((tau_hat - tau + np.pi) % (2.0 * np.pi) - np.pi)
        rows.append({
            "sigma": sigma, "N": N, "reps": spec.reps,
            "median_abs_err": float(np.median(errs)),
        })
    return rows


# --------------------------------------------------------------------------
# tail bounds

def _grid_sup(coeffs: np.ndarray, grid: int, absolute: bool) -> np.ndarray:
    """Row-wise sup over a uniform t-grid of Re sum_j c_j e^{i j t}."""
    R, N = coeffs.shape
    buf = np.zeros((R, grid), dtype=complex)
    buf[:, 1 : N + 1] = coeffs
    vals = np.real(np.fft.ifft(buf, axis=1)) * grid
    return np.max(np.abs(vals), axis=1) if absolute else np.max(vals, axis=1)


def _tail_case_mc(case: TailBoundCase, case_index: int, reps: int, seed: int,
                  grid: int = 4096, chunk: int = 1024):
    """(empirical probability, printed bound) for one battery entry."""
    s = np.asarray(case.s)
    N = s.size
    l2 = float(np.sqrt(np.sum(s**2)))
    linf = float(np.max(np.abs(s)))
    l4sq = float(np.sqrt(np.sum(s**4)))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(case_index,)))
    hits = 0
    if case.lemma == "lemma2":
        thr = l2 * case.x
        bound = (N + 1) * math.exp(-case.x**2 / 2.0)
        for lo, hi in _chunks(reps, chunk):
            r = hi - lo
            c = s * (rng.standard_normal((r, N)) - 1j * rng.standard_normal((r, N)))
            hits += int(np.sum(_grid_sup(c, grid, absolute=True) >= thr))
    elif case.lemma == "lemma3":
        thr = math.sqrt(2.0) * case.x * (l2 + case.y * linf)
        bound = (N + 1) * math.exp(-case.x**2 / 2.0) + math.exp(-case.y**2 / 2.0)
        for lo, hi in _chunks(reps, chunk):
            r = hi - lo
            eta = rng.standard_normal((r, N)) + 1j * rng.standard_normal((r, N))
            eta2 = rng.standard_normal((r, N)) + 1j * rng.standard_normal((r, N))
            c = s * eta * np.conj(eta2)
            hits += int(np.sum(_grid_sup(c, grid, absolute=True) > thr))
    elif case.lemma == "lemma4":
        thr = 2.0 * l2**2 + 2.0 * math.sqrt(2.0) * l4sq * case.y + 2.0 * linf**2 * case.y**2
        bound = math.exp(-case.y**2 / 2.0)
        for lo, hi in _chunks(reps, chunk):
            r = hi - lo
            sq = rng.standard_normal((r, N)) ** 2 + rng.standard_normal((r, N)) ** 2
            hits += int(np.sum(sq @ (s**2) >= thr))
    elif case.lemma == "prop2":
        # normalized cosine/sine system g = (s_j cos jt, s_j sin jt)/||s||_2
        tgrid = np.linspace(0.0, 2.0 * np.pi, grid + 1)
        gprime_sq = np.full(grid + 1, float(np.sum(np.arange(1, N + 1) ** 2 * s**2)) / l2**2)
        L0 = float(simpson(np.sqrt(gprime_sq), x=tgrid))
        bound = L0 / (2.0 * np.pi) * math.exp(-case.x**2 / 2.0) + float(1.0 - norm_cdf(case.x))
        for lo, hi in _chunks(reps, chunk):
            r = hi - lo
            c = s * (rng.standard_normal((r, N)) - 1j * rng.standard_normal((r, N))) / l2
            hits += int(np.sum(_grid_sup(c, grid, absolute=False) >= case.x))
    else:
        raise ValueError(f"unknown lemma {case.lemma!r}")
    return hits / reps, bound


def run_tail_bounds(spec: ExperimentSpec, battery=DEFAULT_TAIL_BATTERY, workers: int = 1) -> list[dict]:
    """Monte Carlo verification that each printed tail bound dominates its event.

    sup norms are taken over a 4096-point grid; at these small N the grid bias
    of the sup is negligible relative to the Monte Carlo standard error.
    """
    rows = []
    for idx, case in enumerate(battery):
        emp, bound = _tail_case_mc(case, idx, spec.reps, spec.seed)
        se = _binom_se(emp if emp > 0 else 1.0 / spec.reps, spec.reps)
        rows.append({
            "lemma": case.lemma, "label": case.label, "N": len(case.s),
            "x": case.x, "y": case.y, "reps": spec.reps,
            "empirical": emp, "bound": min(bound, 1.0), "se": se,
            "ok": int(emp <= min(bound, 1.0) + 3.0 * se),
        })
    return rows


# --------------------------------------------------------------------------
# LoFT evaluation

def _sample_keypoints(rng, count, x_range, y_range, min_sep=5.0, sep_lattice=6.0, jitter=0.49):
    """Jittered-lattice keypoint sample guaranteeing the minimum separation.

    Random jitter of +-0.49 px on a 6 px lattice keeps all pairwise distances
    above 5 px; sites are chosen uniformly without replacement.
    """
    xs = np.arange(x_range[0], x_range[1] + 1e-9, sep_lattice)
    ys = np.arange(y_range[0], y_range[1] + 1e-9, sep_lattice)
    sites = np.array([(x, y) for x in xs for y in ys])
    if sites.shape[0] < count:
        raise ValueError(f"cannot place {count} keypoints with separation {min_sep}")
    pick = rng.choice(sites.shape[0], size=count, replace=False)
    pts = sites[pick] + rng.uniform(-jitter, jitter, size=(count, 2))
    return pts


def run_loft_eval(
    spec: ExperimentSpec,
    image_a=None,
    image_b=None,
    cfg: loft_mod.LoftConfig = loft_mod.LoftConfig(),
    pairs: int = 2000,
    lam: float = loft_mod.LAMBDA_PAPER,
    calibration_reps: int = 200,
    calibration_pairs: int = 2000,
    out_dir=None,
) -> dict:
    """Keypoint-matching evaluation on a pair of images related by a 90-degree turn.

    For each noise level: sample ``pairs`` keypoints at least 5 px apart and,
    for each pair, degrade both images with fresh independent Gaussian noise
    before computing the match statistic for the true pair (the keypoint and
    its rotated image) and the false pair (rotated keypoint offset by
    (10, 10)), under both the known noise level and the Immerkaer estimate.
    Redrawing the noise per pair keeps the sample independent: one shared
    realization would leave only ~(image area)/(disc area) effective samples.
    Returns per-sigma samples and summary statistics; writes
    'idx,delta,t,tau_hat,is_match' sample files when ``out_dir`` is given.
    """
    if image_a is None:
        image_a = loft_mod.benchmark_texture()
    if image_b is None:
        image_b = loft_mod.rotate90(image_a)
    sigmas = spec.sigma_ladder or (30.0, 60.0)
    r = cfg.radius
    cal = loft_mod.calibrate_ring_noise(
        cfg, image_shape=(2 * r + 16, 2 * r + 16), reps=calibration_reps,
        seed=np.random.SeedSequence(entropy=spec.seed, spawn_key=(0,)).generate_state(1)[0],
        center_pairs=calibration_pairs,
    )
    W, H = image_a.width, image_a.height
    results = {"sigmas": [], "ring_scales": cal.ring_noise_scales}
    for si, sigma in enumerate(sigmas):
        rng_k = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(3, si)))
        # margins keep the keypoint disc, its rotated image, and the rotated
        # point offset by (10, 10) inside both images, jitter included
        pts = _sample_keypoints(rng_k, pairs, (r + 11.5, W - 2.5 - r), (r + 0.5, H - 12.5 - r))
        samples = {"true": {"known": [], "est": []}, "false": {"known": [], "est": []}}
        sigma_hat = None
        for idx, (cx, cy) in enumerate(pts):
            rng_pair = np.random.default_rng(
                np.random.SeedSequence(entropy=spec.seed, spawn_key=(4, si, idx))
            )
            noisy_a = loft_mod.add_gaussian_noise(image_a, sigma, rng_pair)
            noisy_b = loft_mod.add_gaussian_noise(image_b, sigma, rng_pair)
            if sigma_hat is None:
                sigma_hat = 0.5 * (
                    loft_mod.estimate_noise(noisy_a) + loft_mod.estimate_noise(noisy_b)
                )
            mapped = loft_mod.rotate_point_90(cx, cy, W)
            d_a = loft_mod.descriptor(noisy_a, (cx, cy), cal)
            d_b = loft_mod.descriptor(noisy_b, mapped, cal)
            d_f = loft_mod.descriptor(noisy_b, (mapped[0] + 10.0, mapped[1] + 10.0), cal)
            for kind, other in (("true", d_b), ("false", d_f)):
                for path, sg in (("known", sigma), ("est", sigma_hat)):
                    delta, tau_hat, t = loft_mod.match_statistic(d_a, other, sg, cal)
                    samples[kind][path].append((idx, delta, t, tau_hat, int(t <= lam)))
        summary = {"sigma": sigma, "sigma_hat": sigma_hat, "pairs": pairs, "lambda": lam}
        for kind in ("true", "false"):
            for path in ("known", "est"):
                arr = np.array(samples[kind][path])
                tvals = arr[:, 2]
                summary[f"{kind}_{path}_t_mean"] = float(np.mean(tvals))
                summary[f"{kind}_{path}_t_sd"] = float(np.std(tvals))
                summary[f"{kind}_{path}_delta_median"] = float(np.median(arr[:, 1]))
                summary[f"{kind}_{path}_match_rate"] = float(np.mean(arr[:, 4]))
        results["sigmas"].append({"summary": summary, "samples": samples})
        if out_dir is not None:
            import os

            os.makedirs(out_dir, exist_ok=True)
            for kind in ("true", "false"):
                for path in ("known", "est"):
                    rows = [
                        {"idx": int(i), "delta": d, "t": t, "tau_hat": th, "is_match": int(m)}
                        for i, d, t, th, m in samples[kind][path]
                    ]
                    emit_csv(rows, os.path.join(out_dir, f"loft_sigma{sigma:g}_{kind}_{path}.csv"),
                             ["idx", "delta", "t", "tau_hat", "is_match"])
    return results


# --------------------------------------------------------------------------
# CSV / SVG emission

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def emit_csv(rows: list[dict], path, columns: list[str]) -> None:
    """Write rows with a documented header line; floats carry 17 significant digits."""
    if not rows:
        raise ValueError("refusing to write an empty summary")
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path) -> tuple[list[str], list[dict]]:
    """Read a CSV written by :func:`emit_csv`; cell values come back as strings."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    columns = lines[0].split(",")
    rows = [dict(zip(columns, ln.split(","))) for ln in lines[1:]]
    return columns, rows


def emit_svg_plot(
    rows: list[dict],
    path,
    x_key: str,
    y_key: str,
    series_key: str | None = None,
    title: str = "",
    log_x: bool = False,
    width: int = 640,
    height: int = 420,
) -> None:
    """Minimal deterministic SVG line plot (one polyline per series)."""
    if not rows:
        raise ValueError("refusing to plot an empty summary")
    margin = 56
    series = {}
    for row in rows:
        key = str(row[series_key]) if series_key else y_key
        series.setdefault(key, []).append((float(row[x_key]), float(row[y_key])))
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    if log_x:
        xs = [math.log2(x) for x in xs]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x):
        if log_x:
            x = math.log2(x)
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" text-anchor="middle" font-size="12">{x_key}</text>',
        f'<text x="14" y="{height // 2}" font-size="12" transform="rotate(-90 14 {height // 2})" text-anchor="middle">{y_key}</text>',
    ]
    for tick in range(5):
        yv = y_lo + tick * (y_hi - y_lo) / 4.0
        parts.append(
            f'<text x="{margin - 6}" y="{sy(yv):.1f}" text-anchor="end" font-size="10">{yv:.3g}</text>'
        )
    for i, (name, pts) in enumerate(sorted(series.items())):
        pts = sorted(pts)
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        color = palette[i % len(palette)]
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if series_key:
            parts.append(
                f'<text x="{width - margin + 4}" y="{margin + 14 * i}" font-size="11" fill="{color}">{name}</text>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
