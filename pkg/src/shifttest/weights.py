"""Shrinkage-weight sequences nu_j in [0, 1] with finite support."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WeightSequence",
    "ConditionReport",
    "projection_weights",
    "tikhonov_weights",
    "pinsker_weights",
    "custom_weights",
    "weight_norms",
    "check_conditions",
    "save_weights_csv",
    "load_weights_csv",
]


@dataclass(frozen=True)
class WeightSequence:
    """Weights (nu_1, ..., nu_N); implicitly nu_j = 0 for j > N."""

    nu: np.ndarray
    N: int
    family: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        if nu.ndim != 1 or nu.size != self.N or self.N < 1:
            raise ValueError("nu must be a length-N sequence with N >= 1")
        if np.any(nu < 0.0) or np.any(nu > 1.0) or not np.all(np.isfinite(nu)):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "nu", nu)

    @property
    def l1(self) -> float:
        return float(np.sum(self.nu))

    @property
    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.nu**2)))


@dataclass(frozen=True)
class ConditionReport:
    """Finite-N reading of the weight conditions.

    ``a_holds``: nu_1 == 1 exactly (the finite support is guaranteed by
    construction).  ``b_holds``: sum nu_j^2 >= c_lower * N.  ``c_index``:
    min{j : nu_j < c_bar}, which equals N + 1 when no in-support weight falls
    below c_bar; it should diverge along a sequence of designs as the noise
    shrinks.
    """

    a_holds: bool
    b_holds: bool
    c_index: int
    sum_sq: float


def projection_weights(N: int) -> WeightSequence:
    """nu_j = 1 for j <= N, 0 after."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return WeightSequence(np.ones(N), N, "projection")


def tikhonov_weights(N: int, kappa: float, mu: float) -> WeightSequence:
    """nu_j = [1 + (j/(kappa N))^mu]^(-1) on j <= N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if kappa <= 0 or mu <= 1:
        raise ValueError("need kappa > 0 and mu > 1")
    j = np.arange(1, N + 1, dtype=float)
    nu = 1.0 / (1.0 + (j / (kappa * N)) ** mu)
    return WeightSequence(nu, N, "tikhonov", (kappa, mu))


def pinsker_weights(N: int, mu: float) -> WeightSequence:
    """nu_j = max(0, 1 - (j/N)^mu) on j <= N; note nu_N = 0."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if mu <= 0:
        raise ValueError("need mu > 0")
    j = np.arange(1, N + 1, dtype=float)
    nu = np.maximum(0.0, 1.0 - (j / N) ** mu)
    return WeightSequence(nu, N, "pinsker", (mu,))


def custom_weights(nu) -> WeightSequence:
    """Arbitrary user weights; only the [0, 1] and finite-support rules are enforced."""
    nu = np.asarray(nu, dtype=float)
    return WeightSequence(nu, nu.size, "custom")


def weight_norms(w: WeightSequence) -> tuple[float, float]:
    """(||nu||_1, ||nu||_2)."""
    return w.l1, w.l2


def check_conditions(w: WeightSequence, c_lower: float, c_bar: float) -> ConditionReport:
    """Report on conditions (A), (B) and the finite-N proxy for (C)."""
    if c_lower <= 0 or not (0 < c_bar < 1):
        raise ValueError("need c_lower > 0 and 0 < c_bar < 1")
    sum_sq = float(np.sum(w.nu**2))
    below = np.nonzero(w.nu < c_bar)[0]
    c_index = int(below[0]) + 1 if below.size else w.N + 1
    return ConditionReport(
        a_holds=bool(w.nu[0] == 1.0),
        b_holds=bool(sum_sq >= c_lower * w.N),
        c_index=c_index,
        sum_sq=sum_sq,
    )


def save_weights_csv(w: WeightSequence, path) -> None:
    """One 'j,nu' pair per line, ascending j; zero entries are kept explicit."""
    with open(path, "w", encoding="utf-8") as fh:
        for j, v in enumerate(w.nu, start=1):
            fh.write(f"{j},{v:.17g}\n")


def load_weights_csv(path) -> WeightSequence:
    """Read 'j,nu' pairs; omitted indices mean 0; support runs to the largest j listed."""
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            j_s, v_s = line.split(",")
            j = int(j_s)
            if j < 1:
                raise ValueError("weight indices start at 1")
            if j in entries:
                raise ValueError(f"duplicate weight index {j}")
            entries[j] = float(v_s)
    if not entries:
        raise ValueError("empty weight file")
    N = max(entries)
    nu = np.zeros(N)
    for j, v in entries.items():
        nu[j - 1] = v
    return WeightSequence(nu, N, "custom")
