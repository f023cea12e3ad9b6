"""Whitespace-separated correspondence files.

::

    # optional comments
    K1 fx fy cx cy
    K2 fx fy cx cy
    x y x' y' a1 a2 a3 a4     (one AC per line, pixel units)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics, normalize_rows


class ParseError(ValueError):
    pass


@dataclass
class CorrespondenceFile:
    K1: CameraIntrinsics
    K2: CameraIntrinsics
    rows: np.ndarray  # pixel (k, 8)

    def normalized(self) -> np.ndarray:
        return normalize_rows(self.K1, self.K2, self.rows)

    def dumps(self) -> str:
        lines = [f"K{i} {K.fx:.17g} {K.fy:.17g} {K.cx:.17g} {K.cy:.17g}"
                 for i, K in ((1, self.K1), (2, self.K2))]
        lines += [" ".join(f"{v:.17g}" for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"


def _floats(tokens, lineno):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"line {lineno}: not a number") from None
    if not np.all(np.isfinite(vals)):
        raise ParseError(f"line {lineno}: non-finite value")
    return vals


def loads(text: str) -> CorrespondenceFile:
    K = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] in ("K1", "K2"):
            if len(tok) != 5:
                raise ParseError(f"line {lineno}: intrinsics need fx fy cx cy")
            fx, fy, cx, cy = _floats(tok[1:], lineno)
            try:
                K[tok[0]] = CameraIntrinsics(fx, fy, cx, cy)
            except ValueError as e:
                raise ParseError(f"line {lineno}: {e}") from None
            continue
        if len(tok) != 8:
            raise ParseError(f"line {lineno}: expected 8 values, got {len(tok)}")
        rows.append(_floats(tok, lineno))
    if "K1" not in K or "K2" not in K:
        raise ParseError("missing K1/K2 header")
    if not rows:
        raise ParseError("no correspondences")
    return CorrespondenceFile(K["K1"], K["K2"], np.array(rows))


def load(path) -> CorrespondenceFile:
    with open(path) as f:
        return loads(f.read())
