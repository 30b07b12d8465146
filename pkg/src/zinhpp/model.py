"""Model variants, prior hyperparameters and the unconstrained parameter layout."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import expit, log_expit


class Variant(enum.Enum):
    NHPP = "NHPP"
    ZI_NHPP = "ZI-NHPP"
    ZI_NHPP_SE = "ZI-NHPP-SE"
    ZI_NHPP_SE_COV = "ZI-NHPP-SE-COV"
    SZI_NHPP_SE = "SZI-NHPP-SE"
    SZI_NHPP_SE_COV = "SZI-NHPP-SE-COV"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper().replace("_", "-")
        for v in cls:
            if v.value == key:
                return v
        raise ValueError(f"unknown model variant {text!r}")

    @property
    def zero_inflated(self) -> bool:
        return self is not Variant.NHPP

    @property
    def spatial(self) -> bool:
        return self.value.endswith("-SE") or self.value.endswith("-SE-COV")

    @property
    def logistic_pi(self) -> bool:
        return self.value.endswith("-COV")

    @property
    def semiparametric(self) -> bool:
        return self.value.startswith("SZI")


@dataclass(frozen=True)
class PriorConfig:
    """Prior hyperparameters.

    Gamma priors use the shape/rate convention. Normal priors are given by
    mean and standard deviation, so the default ``N(0, 4)`` (variance 4)
    on regression coefficients has ``sd = 2``.
    """

    alpha1_shape: float = 0.1
    alpha1_rate: float = 0.1
    alpha2_shape: float = 0.1
    alpha2_rate: float = 0.1
    beta_mean: float = 0.0
    beta_sd: float = 2.0
    psi_mean: float = 0.0
    psi_sd: float = 2.0
    log_gamma_mean: float = 0.0
    log_gamma_sd: float = 2.0
    tau_shape: float = 0.01
    tau_rate: float = 0.01
    pi_alpha: float = 1.0
    pi_beta: float = 1.0
    sum_to_zero_scale: float = 0.001

    def __post_init__(self):
        for f in fields(self):
            if f.name.endswith(("_shape", "_rate", "_sd", "_alpha", "_beta", "_scale")):
                if not getattr(self, f.name) > 0:
                    raise ValueError(f"prior hyperparameter {f.name} must be positive")


@dataclass(frozen=True)
class ModelSpec:
    """Which model to fit and how covariates are placed.

    ``intensity_covariates`` and ``zero_covariates`` name dataset columns;
    ``None`` means all intensity columns and (for COV variants) all
    zero-inflation columns.
    """

    variant: Variant
    degree: int | None = None
    priors: PriorConfig = field(default_factory=PriorConfig)
    intensity_covariates: tuple | None = None
    zero_covariates: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.intensity_covariates is not None:
            object.__setattr__(self, "intensity_covariates", tuple(self.intensity_covariates))
        if self.zero_covariates is not None:
            object.__setattr__(self, "zero_covariates", tuple(self.zero_covariates))
        if self.variant.semiparametric:
            if self.degree is None or int(self.degree) < 1:
                raise ValueError("Bernstein baseline needs a degree >= 1")
            object.__setattr__(self, "degree", int(self.degree))
        elif self.degree is not None:
            raise ValueError(
                f"{self.variant.value} uses the power-law baseline; no Bernstein degree allowed"
            )
        if not self.variant.logistic_pi and self.zero_covariates:
            raise ValueError(f"{self.variant.value} has constant pi; zero covariates not allowed")
        if self.intensity_covariates and self.zero_covariates:
            both = set(self.intensity_covariates) & set(self.zero_covariates)
            if both:
                raise ValueError(
                    f"covariates {sorted(both)} appear in both the intensity and the logit"
                )

    @property
    def baseline(self) -> str:
        return "bernstein" if self.variant.semiparametric else "powerlaw"

    def resolve_covariates(self, x_names, z_names):
        """Return (intensity names, zero names) after checking them against a dataset."""
        xs = tuple(x_names) if self.intensity_covariates is None else self.intensity_covariates
        if self.variant.logistic_pi:
            zs = tuple(z_names) if self.zero_covariates is None else self.zero_covariates
            if len(zs) < 1:
                raise ValueError(f"{self.variant.value} requires at least one zero covariate")
        else:
            zs = ()
        missing = [n for n in xs if n not in x_names] + [n for n in zs if n not in z_names]
        if missing:
            raise ValueError(f"covariates {missing} not present in the dataset")
        both = set(xs) & set(zs)
        if both:
            raise ValueError(f"covariates {sorted(both)} appear in both the intensity and the logit")
        return xs, zs


# ---------------------------------------------------------------------------
# Unconstrained layout
# ---------------------------------------------------------------------------

_LOG = "log"
_LOGIT = "logit"
_IDENTITY = "identity"


@dataclass(frozen=True)
class Block:
    name: str
    start: int
    size: int
    transform: str

    @property
    def slice(self):
        return slice(self.start, self.start + self.size)


class ParameterLayout:
    """Maps named constrained parameter blocks to a flat unconstrained vector.

    Block order: ``alpha1, alpha2`` or ``gamma``; ``beta``; ``pi`` or ``psi``;
    ``tau, omega``. Positive blocks are log-transformed, ``pi`` is
    logit-transformed, and the rest are left as is.
    """

    def __init__(self, spec: ModelSpec, p: int, q: int = 0, n_areas: int = 0):
        v = spec.variant
        sizes = []
        if v.semiparametric:
            sizes.append(("gamma", spec.degree, _LOG))
        else:
            sizes += [("alpha1", 1, _LOG), ("alpha2", 1, _LOG)]
        sizes.append(("beta", p, _IDENTITY))
        if v.zero_inflated:
            if v.logistic_pi:
                if q < 1:
                    raise ValueError(f"{v.value} requires at least one zero covariate")
                sizes.append(("psi", q + 1, _IDENTITY))
            else:
                sizes.append(("pi", 1, _LOGIT))
        if v.spatial:
            if n_areas < 1:
                raise ValueError("spatial variants need at least one area")
            sizes += [("tau", 1, _LOG), ("omega", n_areas, _IDENTITY)]
        self.spec = spec
        self.p, self.q, self.n_areas = p, q, n_areas
        self.blocks = {}
        start = 0
        for name, size, tr in sizes:
            self.blocks[name] = Block(name, start, size, tr)
            start += size
        self.dim = start

    def __contains__(self, name):
        return name in self.blocks

    def __getitem__(self, name) -> Block:
        return self.blocks[name]

    def coordinate_names(self, x_names=None, z_names=None, area_labels=None):
        """Human-readable name per constrained scalar, in layout order."""
        out = []
        for b in self.blocks.values():
            if b.name in ("alpha1", "alpha2", "pi", "tau"):
                out.append(b.name)
            elif b.name == "gamma":
                out += [f"gamma_{k + 1}" for k in range(b.size)]
            elif b.name == "beta":
                labels = x_names or [str(k + 1) for k in range(b.size)]
                out += [f"beta_{lab}" for lab in labels]
            elif b.name == "psi":
                labels = ["0"] + list(z_names or [str(k + 1) for k in range(b.size - 1)])
                out += [f"psi_{lab}" for lab in labels]
            elif b.name == "omega":
                labels = area_labels or [str(k + 1) for k in range(b.size)]
                out += [f"omega_{lab}" for lab in labels]
        return out

    def constrain(self, u) -> dict:
        """Unconstrained vector to a dict of constrained blocks (scalars for size-1 blocks)."""
        u = np.asarray(u, dtype=float)
        out = {}
        for b in self.blocks.values():
            seg = u[b.slice]
            if b.transform == _LOG:
                val = np.exp(seg)
            elif b.transform == _LOGIT:
                val = expit(seg)
            else:
                val = seg.copy()
            out[b.name] = float(val[0]) if b.name in ("alpha1", "alpha2", "pi", "tau") else val
        return out

    def unconstrain(self, named: dict) -> np.ndarray:
        u = np.zeros(self.dim)
        for b in self.blocks.values():
            if b.name not in named:
                raise KeyError(f"missing parameter block {b.name!r}")
            val = np.atleast_1d(np.asarray(named[b.name], dtype=float))
            if val.size != b.size:
                raise ValueError(f"block {b.name!r} expects {b.size} values, got {val.size}")
            if b.transform == _LOG:
                if np.any(val <= 0) or not np.all(np.isfinite(val)):
                    raise ValueError(f"block {b.name!r} must be positive")
                u[b.slice] = np.log(val)
            elif b.transform == _LOGIT:
                if np.any((val <= 0) | (val >= 1)):
                    raise ValueError(f"block {b.name!r} must lie in (0, 1)")
                u[b.slice] = np.log(val) - np.log1p(-val)
            else:
                if not np.all(np.isfinite(val)):
                    raise ValueError(f"block {b.name!r} must be finite")
                u[b.slice] = val
        return u

    def log_jacobian(self, u):
        """Log |d constrained / d unconstrained| and its gradient in ``u``."""
        u = np.asarray(u, dtype=float)
        grad = np.zeros(self.dim)
        total = 0.0
        for b in self.blocks.values():
            seg = u[b.slice]
            if b.transform == _LOG:
                total += seg.sum()
                grad[b.slice] = 1.0
            elif b.transform == _LOGIT:
                total += float(np.sum(log_expit(seg) + log_expit(-seg)))
                grad[b.slice] = 1.0 - 2.0 * expit(seg)
        return total, grad

    def flat_constrained(self, u) -> np.ndarray:
        """Constrained values flattened in layout order (matches coordinate_names)."""
        named = self.constrain(u)
        return np.concatenate([np.atleast_1d(named[b]) for b in self.blocks])
