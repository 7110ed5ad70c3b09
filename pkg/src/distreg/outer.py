"""Kernel families on mean embeddings: positive semi-definite, indefinite, asymmetric.

Every family is evaluated from embedding-geometry quantities only (inner
products and squared distances of empirical mean embeddings), so any bag pair
valid for the embedding kernel is valid here. The indefinite menu:
difference-of-Gaussians (a linear combination of PSD kernels), tanh of the
embedding inner product, and a tilted-asymmetric variant whose tilt factor
depends on the first argument only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .embedding import Bag, EmbeddingKernelSpec, embed_inner, embed_sq_dist
from .errors import ConfigError, InputError

OUTER_FAMILIES = (
    "gaussian_on_embedding",
    "linear_embedding",
    "dog_indefinite",
    "tanh_indefinite",
    "tilted_asymmetric",
)

_SYMMETRIC = {
    "gaussian_on_embedding": True,
    "linear_embedding": True,
    "dog_indefinite": True,
    "tanh_indefinite": True,
    "tilted_asymmetric": False,
}

_PSD_CLAIMED = {
    "gaussian_on_embedding": True,
    "linear_embedding": True,
    "dog_indefinite": False,
    "tanh_indefinite": False,
    "tilted_asymmetric": False,
}


def _require_positive(name: str, value: float | None) -> float:
    if value is None or not value > 0:
        raise ConfigError(f"parameter {name!r} must be a positive real, got {value}")
    return float(value)


@dataclass(frozen=True)
class OuterKernelSpec:
    """Kernel K on mean embeddings, with family-specific parameters.

    Formulas, writing D2 for the squared embedding distance and E for the
    embedding inner product:

      gaussian_on_embedding  exp(-D2 / (2 sigma^2))
      linear_embedding       E
      dog_indefinite         exp(-D2 / (2 sigma1^2)) - c exp(-D2 / (2 sigma2^2))
      tanh_indefinite        tanh(scale * E + offset)
      tilted_asymmetric      exp(-D2 / (2 sigma^2)) * (1 + c * E(first_arg, ref_bag))

    The tilt factor depends on the first kernel argument only, so the tilted
    family is asymmetric; prediction puts the test embedding in the first slot.
    """

    family: str
    sigma: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None
    c: float | None = None
    scale: float | None = None
    offset: float | None = None
    ref_bag: Bag | None = field(default=None)

    def __post_init__(self):
        if self.family not in OUTER_FAMILIES:
            raise ConfigError(
                f"unknown outer kernel family {self.family!r}; expected one of {OUTER_FAMILIES}"
            )
        if self.family == "gaussian_on_embedding":
            _require_positive("sigma", self.sigma)
        elif self.family == "dog_indefinite":
            s1 = _require_positive("sigma1", self.sigma1)
            s2 = _require_positive("sigma2", self.sigma2)
            _require_positive("c", self.c)
            if s1 == s2:
                raise ConfigError("dog_indefinite requires sigma2 != sigma1")
        elif self.family == "tanh_indefinite":
            _require_positive("scale", self.scale)
            _require_positive("offset", self.offset)
        elif self.family == "tilted_asymmetric":
            _require_positive("sigma", self.sigma)
            _require_positive("c", self.c)
            if self.ref_bag is None:
                raise ConfigError("tilted_asymmetric requires a reference bag")

    @property
    def symmetric(self) -> bool:
        return _SYMMETRIC[self.family]

    @property
    def psd_claimed(self) -> bool:
        return _PSD_CLAIMED[self.family]

    # Convenience constructors mirroring the family menu.
    @classmethod
    def gaussian(cls, sigma: float) -> "OuterKernelSpec":
        return cls(family="gaussian_on_embedding", sigma=sigma)

    @classmethod
    def linear(cls) -> "OuterKernelSpec":
        return cls(family="linear_embedding")

    @classmethod
    def dog(cls, sigma1: float, sigma2: float, c: float) -> "OuterKernelSpec":
        return cls(family="dog_indefinite", sigma1=sigma1, sigma2=sigma2, c=c)

    @classmethod
    def tanh(cls, scale: float, offset: float) -> "OuterKernelSpec":
        return cls(family="tanh_indefinite", scale=scale, offset=offset)

    @classmethod
    def tilted(cls, sigma: float, c: float, ref_bag: Bag) -> "OuterKernelSpec":
        return cls(family="tilted_asymmetric", sigma=sigma, c=c, ref_bag=ref_bag)

    def to_dict(self) -> dict:
        d: dict = {"family": self.family}
        for name in ("sigma", "sigma1", "sigma2", "c", "scale", "offset"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        if self.ref_bag is not None:
            d["ref_bag"] = {
                "id": self.ref_bag.id,
                "points": self.ref_bag.points.tolist(),
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OuterKernelSpec":
        d = dict(d)
        family = d.pop("family", None)
        if family is None:
            raise ConfigError("outer kernel spec missing 'family'")
        ref = d.pop("ref_bag", None)
        ref_bag = Bag(id=ref["id"], points=ref["points"]) if ref is not None else None
        allowed = {"sigma", "sigma1", "sigma2", "c", "scale", "offset"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown outer kernel parameters: {sorted(unknown)}")
        return cls(family=family, ref_bag=ref_bag, **{k: float(v) for k, v in d.items()})


def outer_eval(
    kspec: OuterKernelSpec, espec: EmbeddingKernelSpec, a: Bag, b: Bag
) -> float:
    """Evaluate K(mu_a, mu_b) with `a` in the first kernel slot."""
    if kspec.family == "linear_embedding":
        return embed_inner(espec, a, b)
    if kspec.family == "tanh_indefinite":
        return math.tanh(kspec.scale * embed_inner(espec, a, b) + kspec.offset)
    d2 = embed_sq_dist(espec, a, b)
    if kspec.family == "gaussian_on_embedding":
        return math.exp(-0.5 * d2 / kspec.sigma**2)
    if kspec.family == "dog_indefinite":
        return math.exp(-0.5 * d2 / kspec.sigma1**2) - kspec.c * math.exp(
            -0.5 * d2 / kspec.sigma2**2
        )
    # tilted_asymmetric: tilt through the first argument only
    tilt = 1.0 + kspec.c * embed_inner(espec, a, kspec.ref_bag)
    return math.exp(-0.5 * d2 / kspec.sigma**2) * tilt


class SymmetryCheck(NamedTuple):
    symmetric: bool
    max_asymmetry: float


def check_symmetry(
    kspec: OuterKernelSpec,
    espec: EmbeddingKernelSpec,
    bags: Sequence[Bag],
    tol: float = 1e-10,
) -> SymmetryCheck:
    """Empirically validate the symmetric flag on a bag set.

    Evaluates K in both argument orders over all pairs and reports the largest
    discrepancy. Diagnostic only: cost is O(m^2) full kernel evaluations.
    """
    if len(bags) < 2:
        raise InputError("check_symmetry needs at least 2 bags")
    worst = 0.0
    for i, a in enumerate(bags):
        for b in bags[i + 1 :]:
            gap = abs(
                outer_eval(kspec, espec, a, b) - outer_eval(kspec, espec, b, a)
            )
            worst = max(worst, gap)
    return SymmetryCheck(symmetric=worst <= tol, max_asymmetry=worst)
