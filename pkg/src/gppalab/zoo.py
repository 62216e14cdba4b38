"""String identifiers for the operator zoo.

Recognised identifiers::

    rotation2, rotation4          unit skew rotations (zer A = {0})
    rotation4:<theta>             block rotation by theta (radians)
    identity, identity:<n>        A = Id
    scaled2                       A = 2 Id on R^1
    kernel2                       M = diag(1, 0) (zer A is a line)
    abs, abs:<n>                  subdifferential of the l1 norm
    box:[a,b]x[c,d]x...           normal cone of a box
    zero, zero:<n>                A = 0
    quad:<a>                      gradient of (a/2) x^2
    power:<p>, sqrt, cubic        x -> sign(x)|x|^p
    deadzone                      piecewise-linear map vanishing on [-1, 1]
    linear:<path>                 matrix from a whitespace-separated text file

``ZOO_MEMBERS`` lists the curated members used by batch checks.  The cubic
map is addressable but not a curated member: it is the stock example of a
maximally monotone operator that is not metrically subregular.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import InvalidSpec
from .operators import (
    LinearOperator,
    PiecewiseLinearMap,
    PowerMap,
    SeparableSubdifferential,
    SkewRotation,
)

ZOO_MEMBERS = (
    "rotation2",
    "rotation4:1.0",
    "identity",
    "scaled2",
    "kernel2",
    "abs",
    "abs:3",
    "box:[0,1]x[0,1]",
    "zero",
    "quad:0.5",
    "sqrt",
    "deadzone",
)

_BOX_RE = re.compile(r"\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]")


def load_matrix(path):
    """Read a row-major plain-text matrix (whitespace- or comma-separated)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([float(v) for v in line.replace(",", " ").split()])
    M = np.array(rows, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidSpec(f"{path}: matrix must be square, got shape {M.shape}")
    return M


def _parse_box(text):
    parts = [p for p in text.split("x") if p.strip()]
    bounds = []
    for part in parts:
        m = _BOX_RE.fullmatch(part.strip())
        if m is None:
            raise InvalidSpec(f"cannot parse box factor {part!r}")
        bounds.append((float(m.group(1)), float(m.group(2))))
    return bounds


def make_operator(ident: str, *, check_monotone=True):
    """Build an operator from its zoo identifier.

    File-loaded matrices are checked for monotonicity unless
    ``check_monotone=False`` (used to exercise the verification suite on
    deliberately corrupted inputs).
    """
    ident = ident.strip()
    head, _, arg = ident.partition(":")
    try:
        if head == "rotation2":
            return SkewRotation(1, math.pi / 2, name=ident)
        if head == "rotation4":
            theta = float(arg) if arg else math.pi / 2
            return SkewRotation(2, theta, name=ident)
        if head == "identity":
            n = int(arg) if arg else 1
            return LinearOperator(np.eye(n), name=ident)
        if head == "scaled2":
            return LinearOperator([[2.0]], name=ident)
        if head == "kernel2":
            return LinearOperator([[1.0, 0.0], [0.0, 0.0]], name=ident)
        if head == "abs":
            n = int(arg) if arg else 1
            return SeparableSubdifferential([["abs", 1.0]] * n, name=ident)
        if head == "box":
            return SeparableSubdifferential([["box", lo, hi] for lo, hi in _parse_box(arg)], name=ident)
        if head == "zero":
            n = int(arg) if arg else 1
            return SeparableSubdifferential([["zero"]] * n, name=ident)
        if head == "quad":
            return SeparableSubdifferential([["quad", float(arg or 1.0), 0.0]], name=ident)
        if head == "power":
            return PowerMap(float(arg), name=ident)
        if head == "sqrt":
            return PowerMap(0.5, name=ident)
        if head == "cubic":
            return PowerMap(3.0, name=ident)
        if head == "deadzone":
            return PiecewiseLinearMap([-2.0, -1.0, 1.0, 2.0], [-1.0, 0.0, 0.0, 1.0], name=ident)
        if head == "linear":
            return LinearOperator(load_matrix(arg), name=ident, check_monotone=check_monotone)
    except ValueError as exc:
        raise InvalidSpec(f"bad operator identifier {ident!r}: {exc}") from None
    raise InvalidSpec(f"unknown operator identifier {ident!r}")


def zoo():
    """Instantiate every curated zoo member, keyed by identifier."""
    return {ident: make_operator(ident) for ident in ZOO_MEMBERS}
