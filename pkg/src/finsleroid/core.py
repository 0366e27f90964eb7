"""Parameters, the background frame, and scalar variables of a tangent vector.

One ``Params`` + ``Frame`` pair describes a single tangent space; nothing here
varies over a base manifold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class FinsleroidError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(FinsleroidError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class OutsideBLikeRegion(DomainError):
    """The tangent vector is not inside the cone F = 0 with b > 0."""


class OnAxisSection(DomainError):
    """The tangent vector lies on the two-axes section (w3 <= 0 or w_perp = 0)."""


class ConvergenceError(FinsleroidError, RuntimeError):
    """A root finder failed to bracket or converge."""

    def __init__(self, message: str, bracket=None, iterations: int | None = None):
        super().__init__(message)
        self.bracket = bracket
        self.iterations = iterations


NORMALIZATION_DEFAULTS = {
    "C1": 1.0,
    "C2check": 1.0,
    "C17": 1.0,
    "C39": 1.0,
    "C11": 1.0,
    "Cstar": 0.0,
}


@dataclass(frozen=True)
class Params:
    """Scalar constants of one Class II pseudo-Finsleroid tangent space.

    ``H`` fixes the indicatrix curvature ``-H**2``; ``T`` and ``Chat`` fix the
    separation constants. Everything else is derived in ``__post_init__``.
    """

    H: float
    T: float
    Chat: float
    C1: float = 1.0
    C2check: float = 1.0
    C17: float = 1.0
    C39: float = 1.0
    C11: float = 1.0
    Cstar: float = 0.0

    P: float = field(init=False)
    C: float = field(init=False)
    C7: float = field(init=False)
    H1: float = field(init=False)
    S1: float = field(init=False)
    Lhat1: float = field(init=False)
    N: float = field(init=False)
    A: float = field(init=False)
    Tstar: float = field(init=False)

    def __post_init__(self):
        H, T, Ch = self.H, self.T, self.Chat
        P = 1.0 / (T * Ch)
        H1 = math.sqrt(1.0 - 1.0 / H**2)
        S1 = math.sqrt(1.0 - 1.0 / P)
        derived = {
            "P": P,
            "C": 1.0 / Ch,
            "C7": 1.0 / P,
            "H1": H1,
            "S1": S1,
            "Lhat1": H1 / S1,
            # diverges when P == H**2; only informational
            "N": (1.0 - 1.0 / H**2) / (1.0 / H**2 - 1.0 / P) if P != H**2 else math.inf,
            "A": (1.0 - Ch) / (Ch * T - Ch),
            "Tstar": 1.0 - H**2,
        }
        for key, value in derived.items():
            object.__setattr__(self, key, value)

    @property
    def theta_c(self) -> float:
        """Upper end of the polar-angle range, where R2 vanishes."""
        return math.acos(-math.sqrt((self.T - 1.0) / self.T))

    @property
    def curvature(self) -> float:
        return -self.H**2

    def replace(self, **changes) -> "Params":
        raw = self.raw()
        raw.update(changes)
        return validate_params(raw)

    def raw(self) -> dict:
        return {
            "H": self.H,
            "T": self.T,
            "Chat": self.Chat,
            "C1": self.C1,
            "C2check": self.C2check,
            "C17": self.C17,
            "C39": self.C39,
            "C11": self.C11,
            "Cstar": self.Cstar,
        }

    def to_dict(self) -> dict:
        out = self.raw()
        out.update(
            P=self.P, C=self.C, C7=self.C7, H1=self.H1, S1=self.S1,
            Lhat1=self.Lhat1, N=self.N, A=self.A, Tstar=self.Tstar,
            theta_c=self.theta_c,
        )
        return out


def validate_params(raw: dict | None = None, **kwargs) -> Params:
    """Build a :class:`Params`, rejecting inputs outside the Class II domain.

    Accepts either a mapping or keyword arguments. Missing normalization
    constants default to 1 (and ``Cstar`` to 0).

    >>> p = validate_params(H=2, T=2, Chat=0.25)
    >>> p.P, p.C7
    (2.0, 0.5)
    """
    values = dict(NORMALIZATION_DEFAULTS)
    if raw:
        values.update(raw)
    values.update(kwargs)
    unknown = set(values) - set(NORMALIZATION_DEFAULTS) - {"H", "T", "Chat"}
    if unknown:
        raise DomainError(f"unknown parameter keys: {sorted(unknown)}")
    for key in ("H", "T", "Chat"):
        if key not in values:
            raise DomainError(f"missing required parameter {key!r}")
    try:
        values = {k: float(v) for k, v in values.items()}
    except (TypeError, ValueError) as exc:
        raise DomainError(f"non-numeric parameter: {exc}") from None
    for key, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{key} must be finite")

    H, T, Ch = values["H"], values["T"], values["Chat"]
    if not H > 1.0:
        raise DomainError(f"H > 1 violated (H = {H})")
    if not T > 1.0:
        raise DomainError(f"T > 1 violated (T = {T})")
    if not 0.0 < Ch < 1.0:
        raise DomainError(f"0 < Chat < 1 violated (Chat = {Ch})")
    if not T * Ch < 1.0:
        raise DomainError(f"TChat < 1 violated (TChat = {T * Ch:g})")
    for key in ("C1", "C2check", "C17", "C39", "C11"):
        if not values[key] > 0.0:
            raise DomainError(f"{key} > 0 violated ({key} = {values[key]})")
    return Params(**values)


def load_params(path: str | Path | None) -> Params:
    """Read params from a JSON document; ``None`` gives the default space."""
    if path is None:
        return default_params()
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise DomainError("params document must be a JSON object")
    return validate_params(data)


def default_params() -> Params:
    return validate_params(H=2.0, T=2.0, Chat=0.25)


@dataclass(frozen=True)
class Frame:
    """Covariant orthonormal tetrad (b, i, j, i3) and the background metric."""

    b: np.ndarray
    i: np.ndarray
    j: np.ndarray
    i3: np.ndarray

    def __post_init__(self):
        for name in ("b", "i", "j", "i3"):
            vec = np.array(getattr(self, name), dtype=float)
            if vec.shape != (4,):
                raise DomainError(f"frame vector {name} must have 4 components")
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)
        a = (np.outer(self.b, self.b) - np.outer(self.i, self.i)
             - np.outer(self.j, self.j) - np.outer(self.i3, self.i3))
        if abs(np.linalg.det(a)) < 1e-300:
            raise DomainError("frame vectors are linearly dependent")
        ainv = np.linalg.inv(a)
        # dual basis: e_b^k b_k = 1, e_i^k i_k = 1, ...
        dual = np.linalg.inv(np.stack([self.b, self.i, self.j, self.i3]))
        for arr in (a, ainv, dual):
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "ainv", ainv)
        object.__setattr__(self, "dual", dual)

    @property
    def covectors(self) -> np.ndarray:
        return np.stack([self.b, self.i, self.j, self.i3])

    def raised(self) -> np.ndarray:
        """Rows b^i, i^i, j^i, i3^i obtained with a^ij."""
        return self.covectors @ self.ainv

    def compose(self, b: float, w1, w2, w3):
        """Tangent vector with 1-form values (b, b*w1, b*w2, b*w3)."""
        d = self.dual
        return [b * (d[k, 0] + w1 * d[k, 1] + w2 * d[k, 2] + w3 * d[k, 3]) for k in range(4)]


def default_frame() -> Frame:
    """Canonical basis; a_ij = diag(1, -1, -1, -1)."""
    eye = np.eye(4)
    return Frame(eye[0], eye[1], eye[2], eye[3])


@dataclass(frozen=True)
class ScalarVars:
    b: float
    i: float
    j: float
    i3: float
    w1: float
    w2: float
    w3: float
    wperp: float

    @property
    def z(self) -> float:
        return self.w3

    @property
    def c1(self) -> float:
        return self.w1 / self.w3

    @property
    def c2(self) -> float:
        return self.w2 / self.w3

    @property
    def t(self) -> float:
        return self.w1 / self.w2 if self.w2 != 0.0 else math.copysign(math.inf, self.w1)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("b", "i", "j", "i3", "w1", "w2", "w3", "wperp")}
        for k in ("z", "c1", "c2", "t"):
            try:
                out[k] = getattr(self, k)
            except ZeroDivisionError:
                out[k] = None
        return out


def decompose(y, frame: Frame | None = None) -> ScalarVars:
    """Split a tangent vector into the 1-form values and the ratios w1, w2, w3."""
    frame = frame or default_frame()
    y = np.asarray(y, dtype=float)
    b, i, j, i3 = (float(v) for v in frame.covectors @ y)
    if not b > 0.0:
        raise OutsideBLikeRegion(f"b = {b:g} <= 0")
    w1, w2, w3 = i / b, j / b, i3 / b
    return ScalarVars(b, i, j, i3, w1, w2, w3, math.hypot(w1, w2))
