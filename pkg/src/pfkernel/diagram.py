"""Persistence diagram data model, diagonal geometry and text I/O.

A diagram is a finite multiset of ``(birth, death)`` pairs for a single
homology dimension. Points are kept in insertion order and duplicates are
preserved, since multiplicity carries mass once a diagram is smoothed.

File format (UTF-8)::

    # optional comments
    dim 1
    0.0 1.5
    0.2 inf
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO, Union

import numpy as np

__all__ = [
    "DiagramFormatError",
    "EssentialPolicy",
    "PersistenceDiagram",
    "diagonal_mirror",
    "dump_diagram",
    "load_diagram",
    "project_to_diagonal",
    "read_diagram",
    "write_diagram",
]


class DiagramFormatError(ValueError):
    """Raised for malformed or invalid diagram input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class EssentialPolicy:
    """How points with infinite death are resolved.

    ``EssentialPolicy.drop()`` discards them; ``EssentialPolicy.cap(v)``
    replaces the infinite death with ``v`` (points born after ``v`` are
    rejected as invalid).
    """

    mode: str = "drop"
    value: float | None = None

    def __post_init__(self):
        if self.mode not in ("drop", "cap", "keep"):
            raise ValueError(f"unknown essential policy {self.mode!r}")
        if self.mode == "cap" and (self.value is None or not math.isfinite(self.value)):
            raise ValueError("cap policy needs a finite value")

    @classmethod
    def drop(cls) -> "EssentialPolicy":
        return cls("drop")

    @classmethod
    def cap(cls, value: float) -> "EssentialPolicy":
        return cls("cap", float(value))

    @classmethod
    def keep(cls) -> "EssentialPolicy":
        return cls("keep")

    @classmethod
    def parse(cls, text: str) -> "EssentialPolicy":
        """Parse ``drop``, ``keep`` or ``cap:<value>``."""
        text = text.strip().lower()
        if text in ("drop", "keep"):
            return cls(text)
        if text.startswith("cap:"):
            return cls.cap(float(text[4:]))
        raise ValueError(f"unknown essential policy {text!r}")

    def __str__(self) -> str:
        return f"cap:{self.value!r}" if self.mode == "cap" else self.mode


class PersistenceDiagram:
    """Immutable multiset of persistence points.

    Parameters
    ----------
    points : array_like, shape (n, 2)
        Birth/death pairs. Deaths may be ``inf``; births must be finite.
    dim : int
        Homology dimension the points belong to.
    """

    __slots__ = ("_points", "dim")

    def __init__(self, points: Iterable = (), dim: int = 0):
        arr = np.array(points, dtype=float)
        if arr.size == 0:
            arr = np.empty((0, 2))
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {arr.shape}")
        if np.isnan(arr).any():
            raise ValueError("diagram contains NaN")
        if not np.isfinite(arr[:, 0]).all():
            raise ValueError("births must be finite")
        if (arr[:, 1] < arr[:, 0]).any():
            raise ValueError("death < birth")
        if int(dim) < 0:
            raise ValueError("homology dimension must be nonnegative")
        arr.setflags(write=False)
        self._points = arr
        self.dim = int(dim)

    @property
    def points(self) -> np.ndarray:
        """Read-only ``(n, 2)`` array of points."""
        return self._points

    @property
    def births(self) -> np.ndarray:
        return self._points[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self._points[:, 1]

    @property
    def persistence(self) -> np.ndarray:
        return self._points[:, 1] - self._points[:, 0]

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(map(tuple, self._points.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self._points, other._points)

    def __repr__(self) -> str:
        return f"PersistenceDiagram(n={len(self)}, dim={self.dim})"

    def is_finite(self) -> bool:
        return bool(np.isfinite(self._points).all())

    def sorted(self) -> "PersistenceDiagram":
        """Copy with points in lexicographic (birth, death) order."""
        order = np.lexsort((self._points[:, 1], self._points[:, 0]))
        return PersistenceDiagram(self._points[order], self.dim)

    def resolve_essential(self, policy: EssentialPolicy) -> "PersistenceDiagram":
        """Apply an essential-class policy to points with infinite death."""
        inf = np.isinf(self._points[:, 1])
        if not inf.any() or policy.mode == "keep":
            return self
        if policy.mode == "drop":
            return PersistenceDiagram(self._points[~inf], self.dim)
        pts = self._points.copy()
        if (pts[inf, 0] > policy.value).any():
            raise ValueError(f"essential point born after cap value {policy.value}")
        pts[inf, 1] = policy.value
        return PersistenceDiagram(pts, self.dim)


def project_to_diagonal(u) -> tuple[float, float]:
    """Orthogonal projection of a point onto the diagonal ``y = x``.

    >>> project_to_diagonal((1.0, 3.0))
    (2.0, 2.0)
    """
    b, d = float(u[0]), float(u[1])
    if not (math.isfinite(b) and math.isfinite(d)):
        raise ValueError("cannot project a point with infinite coordinates; resolve essential classes first")
    m = (b + d) / 2.0
    return (m, m)


def diagonal_mirror(dg: PersistenceDiagram) -> PersistenceDiagram:
    """Project every point of ``dg`` onto the diagonal, keeping multiplicity."""
    if not dg.is_finite():
        raise ValueError("cannot project a point with infinite coordinates; resolve essential classes first")
    mid = dg.points.sum(axis=1) / 2.0
    return PersistenceDiagram(np.column_stack([mid, mid]), dg.dim)


def _parse_float(token: str, lineno: int) -> float:
    t = token.lower()
    if t in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    try:
        value = float(token)
    except ValueError:
        raise DiagramFormatError(f"cannot parse number {token!r}", lineno) from None
    if math.isnan(value):
        raise DiagramFormatError("NaN coordinate", lineno)
    return value


def load_diagram(source: Union[str, bytes, TextIO], policy: EssentialPolicy | None = None) -> PersistenceDiagram:
    """Parse a diagram from text, bytes or a text stream.

    Essential points are resolved with ``policy`` (default: drop).
    """
    policy = policy or EssentialPolicy.drop()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)

    dim = 0
    seen_header = False
    points: list[tuple[float, float]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0].lower() == "dim":
            if seen_header or points:
                raise DiagramFormatError("'dim' header must come once, before any point", lineno)
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise DiagramFormatError(f"bad header {line!r}", lineno)
            dim = int(tokens[1])
            seen_header = True
            continue
        if len(tokens) != 2:
            raise DiagramFormatError(f"expected 'birth death', got {line!r}", lineno)
        b = _parse_float(tokens[0], lineno)
        d = _parse_float(tokens[1], lineno)
        if math.isinf(b):
            raise DiagramFormatError("birth must be finite", lineno)
        if d < b:
            raise DiagramFormatError(f"death {d!r} < birth {b!r}", lineno)
        points.append((b, d))
    return PersistenceDiagram(points, dim).resolve_essential(policy)


def dump_diagram(dg: PersistenceDiagram) -> str:
    """Canonical text form; ``load_diagram(dump_diagram(d), keep)`` round-trips exactly."""
    lines = [f"dim {dg.dim}"]
    for b, d in dg.points.tolist():
        lines.append(f"{b!r} {'inf' if math.isinf(d) else repr(d)}")
    return "\n".join(lines) + "\n"


def read_diagram(path, policy: EssentialPolicy | None = None) -> PersistenceDiagram:
    with open(path, encoding="utf-8") as fh:
        try:
            return load_diagram(fh, policy)
        except DiagramFormatError as exc:
            raise DiagramFormatError(f"{path}: {exc}") from None


def write_diagram(path, dg: PersistenceDiagram) -> None:
    Path(path).write_text(dump_diagram(dg), encoding="utf-8")
