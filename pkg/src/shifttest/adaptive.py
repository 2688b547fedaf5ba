"""Shift test with unknown noise level (requires equal scales in both samples).

The ratio statistic estimates the noise from the high-frequency band
j = N+1..p that the shrinkage weights leave untouched, so the observations
must carry p >= 2N coefficients.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralObservation
from .testing import _max_profile, norm_quantile
from .weights import WeightSequence

__all__ = [
    "AdaptiveConfig",
    "AdaptiveOutcome",
    "statistic_tilde",
    "log_form_statistic",
    "critical_value",
    "critical_value_mc",
    "adaptive_decide",
]


@dataclass(frozen=True)
class AdaptiveConfig:
    """Weights, observable band size p, level, and the beta-grid resolution."""

    weights: WeightSequence
    p: int
    alpha: float = 0.05
    beta_grid: int = 999
    grid_oversampling: int = 8
    refine_tol: float = 1e-12

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.p < 2 * self.weights.N:
            raise ValueError(f"need p >= 2N = {2 * self.weights.N}, got p = {self.p}")
        if self.beta_grid < 2:
            raise ValueError("beta_grid must be >= 2")

    @property
    def theorem_c_prime(self) -> float:
        """N^2 max_j j^{-2} (1 - nu_j) over j = 1..p (hypothesis constant, reported)."""
        N = self.weights.N
        one_minus = np.ones(self.p)
        one_minus[:N] = 1.0 - self.weights.nu
        j = np.arange(1, self.p + 1, dtype=float)
        return float(N**2 * np.max(one_minus / j**2))

    def _complement_norms(self) -> tuple[float, float]:
        """(||1-nu||_1, ||1-nu||_2) over j = 1..p (nu_j = 0 beyond the support)."""
        one_minus = 1.0 - self.weights.nu
        l1 = float(np.sum(one_minus)) + (self.p - self.weights.N)
        l2 = float(np.sqrt(np.sum(one_minus**2) + (self.p - self.weights.N)))
        return l1, l2


@dataclass(frozen=True)
class AdaptiveOutcome:
    delta_tilde: float
    t_stat: float
    critical: float
    reject: bool
    noise_proxy: float
    tau_hat: float


def _check_adaptive_pair(obs_a, obs_b, cfg):
    if obs_a.dims != 1 or obs_b.dims != 1:
        raise ValueError("the adaptive test is defined for 1-dimensional observations")
    if obs_a.length != cfg.p or obs_b.length != cfg.p:
        raise ValueError(f"observations must carry exactly p = {cfg.p} coefficients")


def _tilde_parts(obs_a, obs_b, cfg):
    w = cfg.weights
    comp_l1, _ = cfg._complement_norms()
    if comp_l1 == 0.0:
        raise ValueError("no noise information: all weights are 1 and p <= N")
    y = obs_a.coeffs[0]
    ys = obs_b.coeffs[0]
    one_minus = np.ones(cfg.p)
    one_minus[: w.N] = 1.0 - w.nu
    denom = float(np.sum(one_minus * (np.abs(y) ** 2 + np.abs(ys) ** 2)))
    if denom == 0.0:
        raise ValueError("zero high-frequency energy: noise level is not identifiable")
    products = w.nu * y[: w.N] * np.conj(ys[: w.N])
    quad = float(np.sum(w.nu * (np.abs(y[: w.N]) ** 2 + np.abs(ys[: w.N]) ** 2)))
    m_max, tau_hat = _max_profile(products, cfg.grid_oversampling, cfg.refine_tol)
    min_dist = quad - 2.0 * m_max
    return min_dist, denom, comp_l1, tau_hat


def statistic_tilde(
    obs_a: SpectralObservation, obs_b: SpectralObservation, cfg: AdaptiveConfig
) -> tuple[float, float, float]:
    """(delta_tilde, t_stat, noise_proxy) for the ratio statistic.

    delta_tilde = ||1-nu||_1 * min_tau ||Y - e(tau) o Y#||^2_{2,nu}
                  / (||Y||^2_{2,1-nu} + ||Y#||^2_{2,1-nu})
    and t_stat = (delta_tilde - ||nu||_1) / ||nu||_2.
    """
    _check_adaptive_pair(obs_a, obs_b, cfg)
    min_dist, denom, comp_l1, _ = _tilde_parts(obs_a, obs_b, cfg)
    delta_tilde = comp_l1 * min_dist / denom
    t_stat = (delta_tilde - cfg.weights.l1) / cfg.weights.l2
    return delta_tilde, t_stat, denom


def log_form_statistic(
    obs_a: SpectralObservation, obs_b: SpectralObservation, cfg: AdaptiveConfig
) -> float:
    """Read-only diagnostic p log(1 + min_tau ||.||^2_{2,nu} / (2 denom))."""
    _check_adaptive_pair(obs_a, obs_b, cfg)
    min_dist, denom, _, _ = _tilde_parts(obs_a, obs_b, cfg)
    return float(cfg.p * np.log1p(min_dist / (2.0 * denom)))


def critical_value(cfg: AdaptiveConfig) -> float:
    """min over beta of z_{1-beta} + (||nu||_1 ||1-nu||_2 / (sqrt(2) ||nu||_2 ||1-nu||_1)) z_{1-alpha+beta}.

    The quantile z_{1-alpha+beta} only exists for beta < alpha, so the grid
    covers (alpha/1000, alpha (1 - 1/1000)) with cfg.beta_grid uniform points.
    """
    w = cfg.weights
    comp_l1, comp_l2 = cfg._complement_norms()
    factor = w.l1 * comp_l2 / (np.sqrt(2.0) * w.l2 * comp_l1)
    betas = np.linspace(cfg.alpha / 1000.0, cfg.alpha * (1.0 - 1.0 / 1000.0), cfg.beta_grid)
    vals = norm_quantile(1.0 - betas) + factor * norm_quantile(1.0 - cfg.alpha + betas)
    return float(np.min(vals))


def critical_value_mc(cfg: AdaptiveConfig, reps: int = 100_000, seed: int = 0, chunk: int = 512) -> float:
    """Monte Carlo alternative: empirical (1-alpha) quantile of the two-term bound.

    Simulates Z = sum_j nu_j (|xi_j|^2 - 2) / (2||nu||_2)
               + (||nu||_1 / (4||nu||_2)) sum_j (1-nu_j)(4 - |xi_j|^2 - |xi_j^#|^2) / ||1-nu||_1
    with xi, xi# standard complex Gaussian (unit-variance real and imaginary parts).
    """
    w = cfg.weights
    comp_l1, _ = cfg._complement_norms()
    nu_full = np.zeros(cfg.p)
    nu_full[: w.N] = w.nu
    one_minus = 1.0 - nu_full
    rng = np.random.default_rng(seed)
    out = np.empty(reps)
    done = 0
    while done < reps:
        r = min(chunk, reps - done)
        sq = rng.standard_normal((r, cfg.p)) ** 2 + rng.standard_normal((r, cfg.p)) ** 2
        sq2 = rng.standard_normal((r, cfg.p)) ** 2 + rng.standard_normal((r, cfg.p)) ** 2
        z1 = (sq - 2.0) @ nu_full / (2.0 * w.l2)
        z2 = (w.l1 / (4.0 * w.l2)) * ((4.0 - sq - sq2) @ one_minus) / comp_l1
        out[done : done + r] = z1 + z2
        done += r
    return float(np.quantile(out, 1.0 - cfg.alpha))


def adaptive_decide(
    obs_a: SpectralObservation,
    obs_b: SpectralObservation,
    cfg: AdaptiveConfig,
    critical: float | None = None,
) -> AdaptiveOutcome:
    """Full outcome; ``critical`` may be precomputed (e.g. the Monte Carlo variant)."""
    _check_adaptive_pair(obs_a, obs_b, cfg)
    min_dist, denom, comp_l1, tau_hat = _tilde_parts(obs_a, obs_b, cfg)
    delta_tilde = comp_l1 * min_dist / denom
    t_stat = (delta_tilde - cfg.weights.l1) / cfg.weights.l2
    crit = critical_value(cfg) if critical is None else float(critical)
    return AdaptiveOutcome(
        delta_tilde=float(delta_tilde),
        t_stat=float(t_stat),
        critical=crit,
        reject=bool(t_stat >= crit),
        noise_proxy=float(denom),
        tau_hat=float(tau_hat),
    )
