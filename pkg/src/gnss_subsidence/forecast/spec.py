"""
Model specifications: the model kind, its hyperparameters and the seed.

Every kind has a complete default set; a spec only stores overrides, and
``resolved()`` merges them over the defaults. Unknown keys are rejected at
construction so a misspelt config entry never passes silently.
"""

from dataclasses import dataclass, field
from enum import Enum

from ..errors import ConfigError


class ModelKind(str, Enum):
    MLP = "MLP"
    BNN = "BNN"
    RBF = "RBF"
    GP = "GP"
    KNN = "KNN"
    GRNN = "GRNN"
    CART = "CART"
    SVR = "SVR"
    THETA = "THETA"


ML_KINDS = tuple(k for k in ModelKind if k is not ModelKind.THETA)

# name -> (default, type); type "float?" means a float or None (rule-based)
_PARAMS = {
    ModelKind.GP: {
        "kernel": ("se", ("se", "linear", "se+linear")),
        "length_scale": (None, "float?"),
        "signal_variance": (None, "float?"),
        "noise": (1e-4, float),
        "jitter": (1e-10, float),
    },
    ModelKind.KNN: {
        "k": (5, int),
        "weights": ("distance", ("distance", "uniform")),
    },
    ModelKind.GRNN: {
        "bandwidth": (None, "float?"),
    },
    ModelKind.RBF: {
        "centers": (50, int),
        "lloyd_iterations": (10, int),
        "width": (None, "float?"),
    },
    ModelKind.CART: {
        "max_depth": (8, int),
        "min_leaf": (5, int),
    },
    ModelKind.MLP: {
        "hidden": (32, int),
        "learning_rate": (0.05, float),
        "epochs": (5000, int),
        "tol": (1e-10, float),
        "weight_decay": (0.0, float),
        "strict": (False, bool),
    },
    ModelKind.BNN: {
        "hidden": (32, int),
        "learning_rate": (0.05, float),
        "epochs": (5000, int),
        "tol": (1e-10, float),
        "prior_precision": (1.0, float),
        "noise_variance": (1e-2, float),
        "strict": (False, bool),
    },
    ModelKind.SVR: {
        "kernel": ("se", ("se", "linear")),
        "length_scale": (None, "float?"),
        "epsilon": (None, "float?"),
        "C": (10.0, float),
        "tol": (1e-3, float),
        "max_sweeps": (2000, int),
    },
    ModelKind.THETA: {
        "alpha_step": (0.01, float),
    },
}

_NONNEGATIVE = {"noise", "jitter", "weight_decay", "epsilon"}
_POSITIVE = {"length_scale", "signal_variance", "bandwidth", "width", "learning_rate",
             "tol", "prior_precision", "noise_variance", "C", "k", "centers", "hidden",
             "epochs", "max_sweeps", "min_leaf"}


def default_hyperparameters(kind):
    kind = ModelKind(kind)
    return {name: default for name, (default, _) in _PARAMS[kind].items()}


def _coerce(kind, name, value):
    default, typ = _PARAMS[kind][name]
    if isinstance(typ, tuple):
        value = str(value).strip().lower()
        if value not in typ:
            raise ConfigError(f"{kind.value}.{name} must be one of {typ}, got {value!r}")
        return value
    if isinstance(value, str):
        text = value.strip()
        if typ == "float?" and text.lower() in ("", "none", "auto"):
            return None
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{kind.value}.{name} must be a boolean, got {value!r}")
        value = text
    if value is None:
        if typ == "float?":
            return None
        raise ConfigError(f"{kind.value}.{name} may not be empty")
    try:
        if typ is int:
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError
            out = int(as_float)
        elif typ is bool:
            if not isinstance(value, (bool, int)):
                raise ValueError
            out = bool(value)
        else:
            out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{kind.value}.{name}: cannot interpret {value!r}") from None
    if typ is not bool:
        if out != out or out in (float("inf"), float("-inf")):
            raise ConfigError(f"{kind.value}.{name} must be finite")
        if name in _POSITIVE and out <= 0:
            raise ConfigError(f"{kind.value}.{name} must be positive, got {out}")
        if name in _NONNEGATIVE and out < 0:
            raise ConfigError(f"{kind.value}.{name} must be non-negative, got {out}")
        if name in ("max_depth", "lloyd_iterations") and out < 0:
            raise ConfigError(f"{kind.value}.{name} must be non-negative, got {out}")
        if name == "alpha_step" and not 0 < out <= 0.5:
            raise ConfigError(f"{kind.value}.alpha_step must lie in (0, 0.5], got {out}")
    return out


@dataclass(frozen=True)
class ModelSpec:
    """
    Kind, hyperparameter overrides and seed of one forecasting model.

    All randomness of a fit is drawn from ``numpy.random.default_rng(seed)``.
    """

    kind: ModelKind
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        try:
            kind = ModelKind(str(getattr(self.kind, "value", self.kind)).upper())
        except ValueError:
            raise ConfigError(f"unknown model kind {self.kind!r}; choose from "
                              f"{', '.join(k.value for k in ModelKind)}") from None
        known = _PARAMS[kind]
        unknown = sorted(set(self.hyperparameters) - set(known))
        if unknown:
            raise ConfigError(f"unknown {kind.value} hyperparameter(s) {unknown}; "
                              f"accepted: {sorted(known)}")
        clean = {k: _coerce(kind, k, v) for k, v in self.hyperparameters.items()}
        if isinstance(self.seed, bool) or int(self.seed) != self.seed:
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hyperparameters", clean)
        object.__setattr__(self, "seed", int(self.seed))

    def resolved(self):
        """Defaults overlaid with the overrides."""
        params = default_hyperparameters(self.kind)
        params.update(self.hyperparameters)
        return params

    def describe(self):
        return {"kind": self.kind.value, "seed": self.seed, "hyperparameters": self.resolved()}

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.hyperparameters.items())), self.seed))


def defaults_help():
    """One line per kind listing every default, used by the command line help."""
    lines = []
    for kind, params in _PARAMS.items():
        items = ", ".join(f"{k}={'rule' if d is None else d}" for k, (d, _) in params.items())
        lines.append(f"{kind.value}: {items}")
    return "\n".join(lines)
