"""Digits to points and back.

``project`` and ``series_expansion`` send a digit word to a point;
``digits_of`` recovers the word of a point by descending through the
branch images, and reports whether the point has one expansion, two
(it sits on a shared endpoint) or none within the scanned depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple

from ._numeric import Number
from .errors import DigitError, StreamExhaustedError
from .gls_core import DEFAULT_EXACT_DEPTH, Family, Ffi, ffi, omega_prefix

UNIQUE = "unique"
BOUNDARY = "boundary"
NO_EXPANSION = "no-expansion"


@dataclass
class Projection:
    point: Number
    error_bound: Number
    depth: int
    word: Tuple[int, ...]
    ffi: Ffi


def project(family: Family, omega, digits: Iterable[int], depth: Optional[int] = None,
            tol: Optional[float] = None, exact_depth: int = DEFAULT_EXACT_DEPTH) -> Projection:
    """Midpoint of the FFI of the first ``depth`` digits, or of the shortest
    prefix whose FFI is no longer than ``tol``.

    The error bound is half the FFI length: the limit point of any
    continuation lies in the same interval.
    """
    if (depth is None) == (tol is None):
        raise ValueError("give exactly one of depth or tol")
    if depth is not None and depth < 0:
        raise ValueError("depth must be >= 0")
    if tol is not None and not tol > 0:
        raise ValueError("tol must be positive")

    it = iter(digits)
    word: List[int] = []
    log_tol = math.log(tol) if tol is not None else None
    log_len = 0.0
    while True:
        if depth is not None and len(word) >= depth:
            break
        if tol is not None and log_len <= log_tol:
            break
        try:
            b = next(it)
        except StopIteration:
            target = f"depth {depth}" if depth is not None else f"tolerance {tol}"
            raise StreamExhaustedError(
                f"digit stream ended after {len(word)} digits before reaching {target}") from None
        s = omega_prefix(omega, len(word) + 1)[-1]
        sys_ = family[s]
        try:
            sys_.check_digit(b)
        except DigitError as exc:
            raise DigitError(f"position {len(word) + 1}: {exc}") from None
        word.append(int(b))
        log_len -= sys_.log_N(int(b))

    box = ffi(family, omega, word, exact_depth=exact_depth)
    if box.exact:
        mid = (box.left + box.right) / 2
        err = (box.right - box.left) / 2
    else:
        mid = 0.5 * (float(box.left) + float(box.right))
        err = 0.5 * (float(box.right) - float(box.left))
    return Projection(mid, err, len(word), tuple(word), box)


def series_expansion(family: Family, omega, word) -> Number:
    """Signed series sum_n (-1)^(eps_1+...+eps_{n-1}) a_n / (N_1 ... N_n).

    For a finite word this is f_{w1,b1} o ... o f_{wn,bn}(0).
    """
    word = [int(b) for b in word]
    prefix = omega_prefix(omega, len(word))
    total = 0
    scale = 1  # (-1)^(sum eps) / prod N over earlier positions
    for s, b in zip(prefix, word):
        sys_ = family[s]
        sys_.check_digit(b)
        N = sys_.N(b)
        total = total + scale * sys_.offset(b) / N
        scale = scale / N
        if sys_.orientation(b):
            scale = -scale
    return total


@dataclass
class Expansion:
    """Result of :func:`digits_of`.

    ``word`` is the canonical word (the left one at boundary points);
    ``alternative`` is the other word when the classification is boundary.
    For no-expansion, ``failed_level`` is the first level with no admissible
    interval and ``word`` holds the digits found before it.
    """

    word: Tuple[int, ...]
    classification: str
    alternative: Optional[Tuple[int, ...]] = None
    failed_level: Optional[int] = None
    fork_level: Optional[int] = None
    ffi: Optional[Ffi] = None
    omega_prefix: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self):
        out = {"word": list(self.word), "classification": self.classification}
        if self.alternative is not None:
            out["alternative"] = list(self.alternative)
            out["fork_level"] = self.fork_level
        if self.failed_level is not None:
            out["failed_level"] = self.failed_level
        return out


def _as_exact(x):
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return x


def digits_of(family: Family, omega, x, n: int) -> Expansion:
    """Digits b_1..b_n of x, found by locating x in the nested FFIs.

    Floats are converted exactly, so the descent itself makes no rounding
    error for exact systems.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _as_exact(x)
    if not 0 <= x <= 1:
        raise ValueError(f"x = {x} is outside [0, 1]")
    prefix = omega_prefix(omega, n)
    systems = [family[s] for s in prefix]

    # each path: (word, current preimage point); forks happen only at endpoints
    paths = [((), x)]
    dead: List[Tuple[Tuple[int, ...], int]] = []
    fork_level = None
    for level, sys_ in enumerate(systems, start=1):
        nxt = []
        for word, y in paths:
            cands = sys_.locate(y)
            if not cands:
                dead.append((word, level))
                continue
            if len(cands) > 1 and fork_level is None:
                fork_level = level
            for b in cands:
                y2 = sys_.inverse(b, y)
                # clamp float noise for inexact systems
                if not isinstance(y2, Fraction):
                    y2 = min(1.0, max(0.0, y2))
                nxt.append((word + (b,), y2))
        paths = nxt
        if not paths:
            break

    if not paths:
        word, level = max(dead, key=lambda d: d[1])
        return Expansion(word, NO_EXPANSION, failed_level=level, omega_prefix=tuple(prefix))

    boxes = sorted(((ffi(family, prefix, w), w) for w, _ in paths), key=lambda bw: bw[0].left)
    canon_box, canon = boxes[0]
    if len(boxes) == 1:
        return Expansion(canon, UNIQUE, ffi=canon_box, omega_prefix=tuple(prefix))
    return Expansion(canon, BOUNDARY, alternative=boxes[-1][1], fork_level=fork_level,
                     ffi=canon_box, omega_prefix=tuple(prefix))


@dataclass
class Roundtrip:
    residual: float
    bound: float
    ok: bool
    classification: str
    word: Tuple[int, ...]


def roundtrip_check(family: Family, omega, x, n: int) -> Roundtrip:
    """|project(digits_of(x, n), depth n) - x| against the realised FFI length."""
    exp = digits_of(family, omega, x, n)
    if exp.classification == NO_EXPANSION:
        return Roundtrip(math.inf, 0.0, False, exp.classification, exp.word)
    proj = project(family, omega, exp.word, depth=n)
    xe = _as_exact(x)
    if proj.ffi.exact:
        residual = abs(proj.point - xe)
        bound = proj.ffi.right - proj.ffi.left
        ok = residual <= bound
        return Roundtrip(float(residual), float(bound), ok, exp.classification, exp.word)
    residual = abs(float(proj.point) - float(xe))
    bound = float(proj.ffi.right) - float(proj.ffi.left)
    return Roundtrip(residual, bound, residual <= bound, exp.classification, exp.word)
