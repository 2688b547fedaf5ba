"""Signals and observations in the Fourier domain.

Everything here works with the coefficients c_j = int_0^1 f(t) e^{2 i pi j t} dt
for j >= 1 (note the plus sign in the exponent; c_0 is excluded throughout
because the shift test ignores additive constants).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpectralSignal",
    "SpectralObservation",
    "SignalSpec",
    "heavisine_values",
    "quadrature_fourier_coeffs",
    "heavisine_coeffs",
    "heavisine_smoothed_coeffs",
    "perturbation_coeffs",
    "apply_shift",
    "synthesize_observation",
    "save_observation_csv",
    "load_observation_csv",
]

DEFAULT_QUADRATURE_GRID = 1 << 21

PERTURBATION_KINDS = ("cos4_perturbation", "rational_perturbation", "rational_unsmoothed")
SIGNAL_KINDS = ("heavisine_smoothed",) + PERTURBATION_KINDS


@dataclass(frozen=True)
class SpectralSignal:
    """Fourier coefficients (c_1, ..., c_J) of a 1-periodic signal, per dimension.

    ``coeffs`` has shape (dims, J); row m holds the coefficients of the m-th
    coordinate. Index j starts at 1, i.e. coeffs[:, 0] is c_1.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 2 or c.shape[1] < 1:
            raise ValueError("coeffs must be a (dims, J) array with J >= 1")
        if not np.all(np.isfinite(c.real)) or not np.all(np.isfinite(c.imag)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def dims(self) -> int:
        return self.coeffs.shape[0]

    @property
    def length(self) -> int:
        return self.coeffs.shape[1]

    def sobolev_budget(self, s: float) -> np.ndarray:
        """Per-dimension value of sum_j j^{2s} |c_j|^2."""
        j = np.arange(1, self.length + 1, dtype=float)
        return np.sum(j ** (2.0 * s) * np.abs(self.coeffs) ** 2, axis=1)

    def check_sobolev(self, s: float, radius: float) -> bool:
        """True when every dimension satisfies sum_j j^{2s}|c_j|^2 <= radius^2."""
        return bool(np.all(self.sobolev_budget(s) <= radius**2))

    def norms(self) -> np.ndarray:
        """Per-dimension l2 norm of the retained coefficients (Parseval, j >= 1)."""
        return np.sqrt(np.sum(np.abs(self.coeffs) ** 2, axis=1))


@dataclass(frozen=True)
class SpectralObservation:
    """Noisy coefficients Y_j = c_j + sigma xi_j, with per-dimension noise scale.

    ``sigma`` is the scale of the complex noise in the convention where the
    real and imaginary parts of xi_j are independent N(0, 1), so
    E|Y_j - c_j|^2 = 2 sigma^2.  sigma == 0 is tolerated only so that
    noiseless observations can be synthesized for testing; the test statistics
    require strictly positive scales.
    """

    coeffs: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        s = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if y.ndim != 2 or y.shape[1] < 1:
            raise ValueError("coeffs must be a (dims, p) array with p >= 1")
        if s.shape != (y.shape[0],):
            raise ValueError("sigma must provide one scale per dimension")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError("sigma entries must be finite and nonnegative")
        if not np.all(np.isfinite(y.real)) or not np.all(np.isfinite(y.imag)):
            raise ValueError("observed coefficients must be finite")
        object.__setattr__(self, "coeffs", y)
        object.__setattr__(self, "sigma", s)

    @property
    def dims(self) -> int:
        return self.coeffs.shape[0]

    @property
    def length(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class SignalSpec:
    """Recipe for a benchmark signal or one of its perturbations."""

    kind: str
    gamma: float = 0.0
    J: int = 100_000

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if self.kind == "heavisine_smoothed" and self.gamma != 0.0:
            raise ValueError("the base signal has gamma = 0")


def heavisine_values(t: np.ndarray) -> np.ndarray:
    """HeaviSine benchmark h(t) = 4 sin(4 pi t) - sign(t - 0.3) - sign(0.72 - t)."""
    t = np.asarray(t, dtype=float)
    return 4.0 * np.sin(4.0 * np.pi * t) - np.sign(t - 0.3) - np.sign(0.72 - t)


def quadrature_fourier_coeffs(sampled_values: np.ndarray, J: int) -> np.ndarray:
    """Coefficients int_0^1 f(t) e^{2 i pi j t} dt, j = 1..J, by composite Simpson.

    ``sampled_values`` are f at t_m = m/M for m = 0..M (M even intervals, both
    endpoints included).  Error is O(M^-4) for smooth integrands.  The weighted
    sum is evaluated for all j at once through one FFT, which is an exact
    reordering of the direct summation.
    """
    v = np.asarray(sampled_values, dtype=float)
    if v.ndim != 1 or v.size < 3 or v.size % 2 == 0:
        raise ValueError("need samples at m/M for m = 0..M with M even")
    M = v.size - 1
    if J < 1:
        raise ValueError("J must be >= 1")
    if M < 4 * J:
        raise ValueError(f"grid too small: M = {M} < 4 J = {4 * J}")
    w = np.empty(M + 1)
    w[0] = w[M] = 1.0
    w[1:M:2] = 4.0
    w[2:M:2] = 2.0
    g = (w * v) / (3.0 * M)
    # fold the t = 1 endpoint onto t = 0 (e^{2 i pi j} = 1)
    g[0] += g[M]
    # sum_m g_m e^{+2 i pi j m / M} = conj(FFT(g))_j for real g
    return np.conj(np.fft.fft(g[:M]))[1 : J + 1]


def heavisine_coeffs(J: int, grid: int = DEFAULT_QUADRATURE_GRID) -> SpectralSignal:
    """Coefficients h_j of the raw HeaviSine function, j = 1..J."""
    if J < 1:
        raise ValueError("J must be >= 1")
    t = np.arange(grid + 1) / grid
    h = quadrature_fourier_coeffs(heavisine_values(t), J)
    return SpectralSignal(h[None, :])


def heavisine_smoothed_coeffs(J: int = 100_000, grid: int = DEFAULT_QUADRATURE_GRID) -> SpectralSignal:
    """Smoothed HeaviSine benchmark: c_j = h_j / j with h_j the HeaviSine coefficient."""
    h = heavisine_coeffs(J, grid=grid).coeffs[0]
    c = h / np.arange(1, J + 1)
    return SpectralSignal(c[None, :])


def _perturbation_raw_coeffs(kind: str, J: int, grid: int) -> np.ndarray:
    t = np.arange(grid + 1) / grid
    if kind == "cos4_perturbation":
        vals = np.cos(4.0 * t)
        return quadrature_fourier_coeffs(vals, J)
    vals = 1.0 / (1.0 + t * t)
    psi = quadrature_fourier_coeffs(vals, J)
    if kind == "rational_perturbation":
        return psi
    # rational_unsmoothed: j-th coefficient of 1/(1+t^2) multiplied by j
    return psi * np.arange(1, J + 1)


def perturbation_coeffs(
    spec: SignalSpec, base: SpectralSignal, grid: int = DEFAULT_QUADRATURE_GRID
) -> SpectralSignal:
    """Coefficients of f + gamma * phi, with phi normalized to match the base norm.

    The normalizing constant makes ||phi|| equal to ||f|| where both norms are
    computed from the retained coefficients (Parseval over j = 1..J).
    """
    if spec.kind not in PERTURBATION_KINDS:
        raise ValueError(f"{spec.kind!r} is not a perturbation kind")
    if base.dims != 1:
        raise ValueError("perturbations are defined for 1-dimensional signals")
    if spec.gamma == 0.0:
        return base
    base_norm = base.norms()[0]
    if base_norm == 0.0:
        raise ValueError("base signal has zero norm; cannot normalize the perturbation")
    J = base.length
    raw = _perturbation_raw_coeffs(spec.kind, J, grid)
    raw_norm = np.sqrt(np.sum(np.abs(raw) ** 2))
    phi = raw * (base_norm / raw_norm)
    return SpectralSignal((base.coeffs[0] + spec.gamma * phi)[None, :])


def apply_shift(signal: SpectralSignal, tau_star: float) -> SpectralSignal:
    """Shifted-curve coefficients c_j^# = e^{i j tau_star} c_j (per dimension)."""
    j = np.arange(1, signal.length + 1)
    phase = np.exp(1j * j * float(tau_star))
    return SpectralSignal(signal.coeffs * phase[None, :])


def synthesize_observation(
    signal: SpectralSignal,
    sigma,
    p: int,
    rng_seed,
) -> SpectralObservation:
    """Noisy observation Y_j = c_j + sigma xi_j, j = 1..p, Re/Im of xi iid N(0,1).

    Coefficients of the signal beyond its length count as zero.  ``rng_seed``
    may be an integer or a ready-made numpy Generator; the result is
    bit-reproducible for a given integer seed.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    d = signal.dims
    sig = np.broadcast_to(np.atleast_1d(np.asarray(sigma, dtype=float)), (d,)).copy()
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    c = np.zeros((d, p), dtype=complex)
    take = min(p, signal.length)
    c[:, :take] = signal.coeffs[:, :take]
    noise = rng.standard_normal((d, p)) + 1j * rng.standard_normal((d, p))
    return SpectralObservation(c + sig[:, None] * noise, sig)


def save_observation_csv(obs: SpectralObservation, path) -> None:
    """Write an observation: header '# dims=<d> p=<p> sigma=<s1,...,sd>', rows dim,j,re,im."""
    sig = ",".join(f"{s:.17g}" for s in obs.sigma)
    lines = [f"# dims={obs.dims} p={obs.length} sigma={sig}"]
    for m in range(obs.dims):
        for j in range(obs.length):
            z = obs.coeffs[m, j]
            lines.append(f"{m + 1},{j + 1},{z.real:.17g},{z.imag:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_observation_csv(path) -> SpectralObservation:
    """Read an observation written by :func:`save_observation_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError("missing observation header line")
        fields = dict(tok.split("=", 1) for tok in header[1:].split())
        try:
            d = int(fields["dims"])
            p = int(fields["p"])
            sigma = np.array([float(s) for s in fields["sigma"].split(",")])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"malformed observation header: {header!r}") from exc
        coeffs = np.zeros((d, p), dtype=complex)
        seen = np.zeros((d, p), dtype=bool)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            dim_s, j_s, re_s, im_s = line.split(",")
            m, j = int(dim_s) - 1, int(j_s) - 1
            if not (0 <= m < d and 0 <= j < p):
                raise ValueError(f"row out of range: {line!r}")
            coeffs[m, j] = float(re_s) + 1j * float(im_s)
            seen[m, j] = True
        if not seen.all():
            raise ValueError("observation file is missing rows")
    return SpectralObservation(coeffs, sigma)
