"""Problem configuration: physical constants, numerics block, and the text parser.

Config files are flat ``key = value`` text; '#' starts a comment.  Unknown
keys are rejected so typos fail loudly.  The derived constants

    alpha     = kappa / (4 pi h sqrt(h^2 + r_star^2))
    alpha_bar = alpha * ln(1/eps)

are always recomputed from the primitives, never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

_PHYSICAL_KEYS = ("h", "kappa", "r_star", "R", "eps", "a", "b", "Lambda")
_NUMERIC_KEYS = (
    "n_r",
    "n_theta",
    "tol_elliptic",
    "tol_fix",
    "tol_mass",
    "max_iters",
    "dt_safety",
    "seed",
)
_REQUIRED_KEYS = ("h", "kappa", "r_star", "R", "eps")
_INT_KEYS = ("n_r", "n_theta", "max_iters", "seed")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemConfig:
    """Physical and numerical parameters of one desk-scale experiment."""

    h: float
    kappa: float
    r_star: float
    R: float
    eps: float
    a: float = 1.0
    b: float = 0.0
    Lambda: float = None  # default 4*(alpha*a + b + 1), resolved in __post_init__
    n_r: int = 256
    n_theta: int = 256
    tol_elliptic: float = 1e-10
    tol_fix: float = 1e-6
    tol_mass: float = 1e-8  # relative to kappa
    max_iters: int = 500
    dt_safety: float = 0.5
    seed: int = 0
    warnings: tuple = field(default_factory=tuple, compare=False)

    def __post_init__(self):
        if self.Lambda is None:
            alpha = self.kappa / (4.0 * math.pi * self.h * math.hypot(self.h, self.r_star))
            object.__setattr__(self, "Lambda", 4.0 * (alpha * self.a + self.b + 1.0))
        self._validate()

    @property
    def alpha(self):
        return self.kappa / (4.0 * math.pi * self.h * math.hypot(self.h, self.r_star))

    @property
    def alpha_bar(self):
        return self.alpha * math.log(1.0 / self.eps)

    @property
    def cap(self):
        """Pointwise bound Lambda/eps^2 of the admissible class."""
        return self.Lambda / self.eps**2

    def _validate(self):
        if not self.h > 0:
            raise ConfigError("h must be positive (pitch of the helix)")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive (total circulation)")
        if not self.R > 0:
            raise ConfigError("R must be positive (disk radius)")
        if not 0 < self.r_star < self.R:
            raise ConfigError(
                f"r_star must satisfy 0 < r_star < R, got r_star={self.r_star}, R={self.R}"
            )
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if not self.a > 0:
            raise ConfigError(
                "a must be positive: the zero-swirl branch a = 0 is out of scope"
            )
        if self.b < 0:
            raise ConfigError("b must be nonnegative")
        lam_floor = self.alpha * self.a + self.b
        lam_proof = 1.0 + math.pi * self.R**2 / self.kappa
        if not self.Lambda > lam_floor:
            raise ConfigError(
                "Lambda too small: need Λ > max{αa+b, 1+πR²/κ} "
                f"(αa+b = {lam_floor:.6g}), got Lambda = {self.Lambda}"
            )
        warnings = []
        if not self.Lambda > lam_proof:
            # The existence proof asks for Lambda > 1 + pi R^2/kappa as well, but
            # the iteration is well-posed whenever the cap clears the profile sup;
            # warn instead of rejecting so small-cap experiments stay runnable.
            warnings.append(
                f"Lambda = {self.Lambda:.6g} is below the proof-side bound "
                f"1+πR²/κ = {lam_proof:.6g}; clamp area should be "
                "checked on the result"
            )
        if self.n_r < 4 or self.n_theta < 8:
            raise ConfigError("grid too small: need n_r >= 4 and n_theta >= 8")
        if self.n_theta % 2 != 0:
            raise ConfigError("n_theta must be even (cross-origin interpolation)")
        for name in ("tol_elliptic", "tol_fix", "tol_mass", "dt_safety"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        object.__setattr__(self, "warnings", tuple(warnings))

    def with_eps(self, eps):
        """Copy with a different concentration parameter (Lambda kept fixed)."""
        return replace(self, eps=eps)

    def as_dict(self):
        keys = _PHYSICAL_KEYS + _NUMERIC_KEYS
        return {k: getattr(self, k) for k in keys}


def parse_config(path) -> ProblemConfig:
    """Read a flat key = value config file and validate it."""
    raw = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key not in _PHYSICAL_KEYS + _NUMERIC_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in raw:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                raw[key] = int(value) if key in _INT_KEYS else float(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"{path}: missing required key(s): {', '.join(missing)}")
    return ProblemConfig(**raw)
