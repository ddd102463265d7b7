"""Simulation scenario description and its JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from ..errors import InputError

FAMILIES = ("lowdim", "categorical", "fullrank_lowdim", "highdim",
            "fullrank_highdim", "submodel")

_DEFAULTS = {
    "lowdim": dict(n=300, p=75, tau=1.0),
    "highdim": dict(n=200, p=300, tau=1.0),
    "categorical": dict(n=100, p=50, tau_c=1.0, tau_f=1.0, coding=1),
    "fullrank_lowdim": dict(n=300, p=150, psi=0.0, s=0.1, coding=1),
    "fullrank_highdim": dict(n=200, p=300, s=0.1, coding=1),
    "submodel": dict(n=100, p=75, p0=5, R1=0.1, R2=1.0),
}

DEFAULT_ESTIMATORS = {
    "lowdim": ["ols", "oracle", "es", "es90", "es95", "rep", "cv", "ridge_cv"],
    "highdim": ["oracle", "rep1", "rep2", "rep3", "rep4", "cv", "ridge_cv"],
    "categorical": ["ols", "oracle", "es", "es95", "rep", "cv", "ridge_cv"],
    "fullrank_lowdim": ["ols", "oracle", "es", "es95", "rep", "cv", "ridge_cv"],
    "fullrank_highdim": ["oracle", "rep1", "rep2", "rep3", "cv", "ridge_cv"],
    "submodel": ["ols", "oracle", "oracle_sb", "es", "es_sb", "es95", "es95_sb",
                 "ridge_cv"],
}

# settings explored in the original experiments; anything else is flagged
_TAUS = {0.0, 1e-4, 1e-2, 1e-1, 10 ** -0.5, 1.0, 10 ** 0.5, 10.0, 10 ** 1.5, 100.0}
_DOCUMENTED = {
    "lowdim": dict(n={300}, p={75, 150, 250}, tau=_TAUS, sigma={1.0}),
    "highdim": dict(n={200}, p={300}, tau=_TAUS, sigma={1.0, 2.0, 3.0}),
    "categorical": dict(n={100}, p={50}, sigma={1.0},
                        tau_c={10 ** -0.5, 1.0, 10 ** 0.5},
                        tau_f={10 ** -0.5, 1.0, 10 ** 0.5}),
    "fullrank_lowdim": dict(n={300}, p={150}, sigma={1.0}, psi={0.0, 1.0},
                            s={0.025, 0.05, 0.1, 0.2, 0.3}),
    "fullrank_highdim": dict(n={200}, p={300}, sigma={1.0, 3.0},
                             s={0.01, 0.02, 0.03, 0.04, 0.05, 0.025, 0.1, 0.2, 0.3}),
    "submodel": dict(n={100}, p={75}, sigma={1.0}, p0={5, 10, 15, 20, 25},
                     R1={0.1, 10 ** -0.5, 1.0, 10 ** 0.5, 10.0},
                     R2={10 ** -0.5, 1.0, 10 ** 0.5, 10.0, 10 ** 1.5}),
}


@dataclass
class SimulationScenario:
    family: str
    n: Optional[int] = None
    p: Optional[int] = None
    sigma: float = 1.0
    tau: Optional[float] = None
    tau_c: Optional[float] = None
    tau_f: Optional[float] = None
    coding: Optional[int] = None
    psi: Optional[float] = None
    s: Optional[float] = None
    u_low: Optional[float] = None
    u_high: Optional[float] = None
    p0: Optional[int] = None
    R1: Optional[float] = None
    R2: Optional[float] = None
    rho: float = 0.5
    seed: int = 0
    replications: int = 50
    folds: int = 10
    estimators: list = field(default_factory=list)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        for key, value in _DEFAULTS[self.family].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if self.family == "fullrank_highdim" and self.u_low is None:
            self.u_low, self.u_high = (1 / 6, 1 / 3) if self.sigma == 3 else (0.25, 0.5)
        if not self.estimators:
            self.estimators = list(DEFAULT_ESTIMATORS[self.family])
        self.validate()

    def validate(self):
        if not isinstance(self.replications, int) or self.replications < 1:
            raise InputError(f"replications must be a positive integer, "
                             f"got {self.replications!r}")
        if self.n < 2 or self.p < 2:
            raise InputError("n and p must both be >= 2")
        if not self.sigma > 0:
            raise InputError("sigma must be positive")
        if self.folds < 2 or self.folds > self.n:
            raise InputError(f"folds must lie in [2, n], got {self.folds}")
        if self.coding not in (None, 1, 2):
            raise InputError(f"coding must be 1 or 2, got {self.coding}")
        if self.family == "categorical" and self.p != 50:
            raise InputError("categorical family has exactly p = 50 columns")
        if self.family == "submodel":
            if not 1 <= self.p0 < self.p:
                raise InputError(f"p0 must lie in [1, p), got {self.p0}")
            if not self.R2 > self.R1 > 0:
                raise InputError("submodel family needs R2 > R1 > 0")
        if self.family == "fullrank_highdim" and not (0 < self.u_low < self.u_high):
            raise InputError("need 0 < u_low < u_high")
        if not isinstance(self.estimators, list) or not all(
                isinstance(e, str) for e in self.estimators):
            raise InputError("estimators must be a list of names")

    @property
    def label(self) -> str:
        keys = {"lowdim": ("n", "p", "tau", "sigma"), "highdim": ("n", "p", "tau", "sigma"),
                "categorical": ("tau_c", "tau_f", "coding"),
                "fullrank_lowdim": ("psi", "s", "coding"),
                "fullrank_highdim": ("sigma", "s", "coding"),
                "submodel": ("p0", "R1", "R2")}[self.family]
        parts = [f"{k}={getattr(self, k):.6g}" if isinstance(getattr(self, k), float)
                 else f"{k}={getattr(self, k)}" for k in keys]
        return f"{self.family}({','.join(parts)})"

    def extrapolated(self) -> list[str]:
        """Parameters outside the settings of the original experiments."""
        flagged = []
        for key, allowed in _DOCUMENTED[self.family].items():
            value = getattr(self, key)
            if not any(math.isclose(value, a, rel_tol=1e-9, abs_tol=1e-12) for a in allowed):
                flagged.append(f"{key}={value}")
        return flagged

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationScenario":
        if not isinstance(data, dict):
            raise InputError("scenario must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"unknown scenario field(s): {', '.join(unknown)}")
        if "family" not in data:
            raise InputError("scenario field 'family' is required")
        try:
            return cls(**data)
        except TypeError as exc:
            raise InputError(f"invalid scenario: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SimulationScenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed scenario JSON at line {exc.lineno}, "
                             f"column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)
