"""Domain types for DCS(1,1) models."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, UsageError

MIN_FIT_LENGTH = 30

# Link codes used by the compiled kernels: working value -> natural value.
LINK_IDENTITY = 0
LINK_LOG = 1
LINK_LOG_SHIFT2 = 2  # v = 2 + exp(x)


class Family(enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "t"
    SKEW_T = "skewt"

    @classmethod
    def parse(cls, value: "Family | str") -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "gaussian": cls.GAUSSIAN,
            "normal": cls.GAUSSIAN,
            "t": cls.STUDENT_T,
            "studentt": cls.STUDENT_T,
            "student": cls.STUDENT_T,
            "skewt": cls.SKEW_T,
        }
        try:
            return aliases[key]
        except KeyError:
            raise UsageError(f"unknown model family {value!r}") from None

    @property
    def code(self) -> int:
        return {Family.GAUSSIAN: 0, Family.STUDENT_T: 1, Family.SKEW_T: 2}[self]

    @property
    def moment_names(self) -> tuple[str, ...]:
        return {
            Family.GAUSSIAN: ("mu", "sigma2"),
            Family.STUDENT_T: ("mu", "phi", "v"),
            Family.SKEW_T: ("mu", "phi", "lambda", "v"),
        }[self]

    @property
    def n_params(self) -> int:
        return len(self.moment_names)


@dataclass(frozen=True)
class ReturnSeries:
    id: str
    values: np.ndarray
    labels: tuple[str, ...] | None = None  # optional per-point row labels (dates)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise DomainError(f"series {self.id!r}: values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise DomainError(f"series {self.id!r}: values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None and len(self.labels) != values.size:
            raise DomainError(f"series {self.id!r}: labels length does not match values")

    def __len__(self) -> int:
        return self.values.size

    def require_fit_length(self) -> None:
        if len(self) < MIN_FIT_LENGTH:
            raise DomainError(
                f"series {self.id!r}: T={len(self)} is below the minimum of {MIN_FIT_LENGTH} for fitting"
            )


@dataclass(frozen=True)
class DcsSpec:
    """Model family, score scaling exponent and link choice for the scale component.

    ``scale_link`` selects the space in which the Gaussian variance recursion
    runs: ``"identity"`` filters sigma2 directly (with ``gamma=1`` this is a
    GARCH(1,1)), ``"log"`` filters log sigma2. The Student-t and skew-t
    families always filter ``log(phi)`` and ``log(v - 2)``.
    """

    family: Family = Family.GAUSSIAN
    gamma: float = 1.0
    scale_link: str | None = None
    orders: tuple[int, int] = (1, 1)

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        gamma = float(self.gamma)
        if gamma not in (0.0, 0.5, 1.0):
            raise DomainError(f"gamma must be one of 0, 0.5, 1 (got {self.gamma})")
        object.__setattr__(self, "gamma", gamma)
        if tuple(self.orders) != (1, 1):
            raise DomainError(f"only DCS(1,1) is supported (got orders {self.orders})")
        object.__setattr__(self, "orders", (1, 1))
        link = self.scale_link
        if link is None:
            link = "identity" if self.family is Family.GAUSSIAN else "log"
        if link not in ("identity", "log"):
            raise DomainError(f"scale_link must be 'identity' or 'log' (got {link!r})")
        if link == "identity" and self.family is not Family.GAUSSIAN:
            raise DomainError("identity scale link is only available for the Gaussian family")
        object.__setattr__(self, "scale_link", link)

    @property
    def moment_names(self) -> tuple[str, ...]:
        return self.family.moment_names

    @property
    def n_params(self) -> int:
        return self.family.n_params

    @property
    def links(self) -> np.ndarray:
        if self.family is Family.GAUSSIAN:
            scale = LINK_IDENTITY if self.scale_link == "identity" else LINK_LOG
            return np.array([LINK_IDENTITY, scale], dtype=np.int64)
        if self.family is Family.STUDENT_T:
            return np.array([LINK_IDENTITY, LINK_LOG, LINK_LOG_SHIFT2], dtype=np.int64)
        return np.array([LINK_IDENTITY, LINK_LOG, LINK_IDENTITY, LINK_LOG_SHIFT2], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"family": self.family.value, "gamma": self.gamma, "scale_link": self.scale_link}


@dataclass(frozen=True)
class DcsParams:
    """Static parameters of the working-space recursion ``f~_t = omega + a*s~_{t-1} + b*f~_{t-1}``.

    All three vectors have one entry per time-varying parameter, in the order
    given by ``Family.moment_names``; ``a`` and ``b`` are the diagonals of A and B.
    """

    omega: np.ndarray
    a_diag: np.ndarray
    b_diag: np.ndarray

    def __post_init__(self):
        arrays = []
        for name in ("omega", "a_diag", "b_diag"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            arrays.append(arr)
        if not (arrays[0].size == arrays[1].size == arrays[2].size):
            raise DomainError("omega, a_diag and b_diag must have equal lengths")
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise DomainError("DCS parameters must be finite")
        if np.any(np.abs(self.b_diag) >= 1.0):
            raise DomainError(f"|b| must be < 1 for a stationary recursion (got {self.b_diag})")

    @property
    def size(self) -> int:
        return self.omega.size

    def check(self, spec: DcsSpec) -> None:
        if self.size != spec.n_params:
            raise DomainError(
                f"{spec.family.value} model needs {spec.n_params} parameters per block, got {self.size}"
            )

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.omega, self.a_diag, self.b_diag])

    @classmethod
    def from_theta(cls, theta) -> "DcsParams":
        theta = np.asarray(theta, dtype=float)
        if theta.size % 3:
            raise DomainError("theta length must be a multiple of 3")
        r = theta.size // 3
        return cls(theta[:r], theta[r : 2 * r], theta[2 * r :])

    def to_dict(self) -> dict:
        return {
            "omega": self.omega.tolist(),
            "a_diag": self.a_diag.tolist(),
            "b_diag": self.b_diag.tolist(),
        }


@dataclass(frozen=True)
class FittedDcs:
    spec: DcsSpec
    params: DcsParams
    loglik: float
    converged: bool
    iterations: int
    init_loglik: float
    grad_norm: float = float("nan")
    series_id: str = ""
    n_obs: int = 0

    def summary(self) -> dict:
        return {
            "id": self.series_id,
            "n": self.n_obs,
            "loglik": self.loglik,
            "init_loglik": self.init_loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "params": self.params.to_dict(),
        }


@dataclass(frozen=True)
class MomentPaths:
    series_id: str
    moments: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.moments)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.moments[name]

    def __len__(self) -> int:
        return len(self.moments)


@dataclass(frozen=True)
class EgarchDgpParams:
    """Beta-Skew-t-EGARCH data-generating process.

    ``skew`` is the slant of an Azzalini-Capitanio skew-t innovation with unit
    scale and ``df`` degrees of freedom.
    """

    omega: float
    phi: float
    alpha: float
    beta: float = 0.0
    skew: float = -0.3
    df: float = 5.0

    def __post_init__(self):
        for name in ("omega", "phi", "alpha", "beta", "skew", "df"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"EGARCH parameter {name} must be finite")
            object.__setattr__(self, name, value)
        if abs(self.phi) >= 1.0:
            raise DomainError(f"|phi| must be < 1 (got {self.phi})")
        if self.df <= 2.0:
            raise DomainError(f"df must exceed 2 (got {self.df})")

    @property
    def eta_mean(self) -> float:
        return self.omega / (1.0 - self.phi)
