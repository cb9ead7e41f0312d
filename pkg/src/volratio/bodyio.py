"""Body descriptors from preset strings and JSON.

Presets::

    b1:n  b2:n  binf:n  bp:p:n  schatten:p:d  kyfan:k:d  gluskin:n:m:seed

Dimension-free families (``b1``, ``b2``, ``binf``, ``bp:p``) are accepted
where an experiment sweeps over dimensions.  Anything else is read as JSON:
an inline object (``{"variant": ...}``) or a path to a file holding one, in
the format produced by ``Body.to_dict``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .bodies import (
    BallIntersection,
    Body,
    LinearImage,
    LpBall,
    PolarPolytope,
    SchattenBall,
    SymmetricGauge,
    SymmetricGaugeBall,
    VPolytope,
    _decode_p,
)
from .linalg import RngStream


class BodySpecError(ValueError):
    """Unparseable body preset or JSON descriptor."""


PRESET_HELP = "b1:n, b2:n, binf:n, bp:p:n, schatten:p:d, kyfan:k:d, gluskin:n:m:seed, or JSON"


def body_from_dict(obj: dict) -> Body:
    try:
        v = obj["variant"]
        if v == "lp_ball":
            return LpBall(_decode_p(obj["p"]), int(obj["n"]))
        if v == "schatten":
            return SchattenBall(_decode_p(obj["p"]), int(obj["d"]))
        if v == "sym_gauge":
            return SymmetricGaugeBall(SymmetricGauge.from_dict(obj["tau"]), int(obj["d"]))
        if v == "vpolytope":
            return VPolytope(np.array(obj["vertices"], dtype=float))
        if v == "polar_vpolytope":
            return PolarPolytope(np.array(obj["vertices"], dtype=float))
        if v == "linear_image":
            return LinearImage(body_from_dict(obj["base"]), np.array(obj["matrix"], dtype=float))
        if v == "ball_intersection":
            return BallIntersection(body_from_dict(obj["base"]), float(obj["radius"]))
    except (KeyError, TypeError) as exc:
        raise BodySpecError(f"malformed body descriptor: missing or bad field {exc}") from exc
    raise BodySpecError(f"unknown body variant {obj.get('variant')!r}")


def _parse_p(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise BodySpecError(f"{what} must be an integer, got {text!r}") from None


def parse_tau(text: str) -> SymmetricGauge:
    """``lp:p`` (or ``schatten:p``) or ``kyfan:k``."""
    parts = text.split(":")
    if len(parts) == 2 and parts[0] in ("lp", "schatten"):
        return SymmetricGauge.lp(_parse_p(parts[1]))
    if len(parts) == 2 and parts[0] == "kyfan":
        return SymmetricGauge.ky_fan(_int(parts[1], "k"))
    raise BodySpecError(f"unknown symmetric gauge {text!r}; use lp:p or kyfan:k")


def parse_body(text: str) -> Body:
    """Body from a preset string, inline JSON, or a JSON file path."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return body_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise BodySpecError(f"malformed JSON body: {exc}") from None
    parts = text.split(":")
    head = parts[0]
    try:
        if head == "b1" and len(parts) == 2:
            return LpBall(1.0, _int(parts[1], "n"))
        if head == "b2" and len(parts) == 2:
            return LpBall(2.0, _int(parts[1], "n"))
        if head == "binf" and len(parts) == 2:
            return LpBall(math.inf, _int(parts[1], "n"))
        if head == "bp" and len(parts) == 3:
            return LpBall(_parse_p(parts[1]), _int(parts[2], "n"))
        if head == "schatten" and len(parts) == 3:
            return SchattenBall(_parse_p(parts[1]), _int(parts[2], "d"))
        if head == "kyfan" and len(parts) == 3:
            return SymmetricGaugeBall(SymmetricGauge.ky_fan(_int(parts[1], "k")), _int(parts[2], "d"))
        if head == "gluskin" and len(parts) == 4:
            from .constructions import gluskin_polytope

            n, m, seed = (_int(p, name) for p, name in zip(parts[1:], ("n", "m", "seed")))
            return gluskin_polytope(n, m, RngStream(seed))
    except ValueError as exc:
        if isinstance(exc, BodySpecError):
            raise
        raise BodySpecError(f"bad preset {text!r}: {exc}") from None
    path = Path(text)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise BodySpecError(f"body file {text!r} not found")
        try:
            return body_from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise BodySpecError(f"malformed JSON in {text!r}: {exc}") from None
    raise BodySpecError(f"unknown body preset {text!r}; expected {PRESET_HELP}")


def parse_family(text: str) -> Callable[[int], Body]:
    """Dimension-indexed family ``n -> body`` from ``b1``, ``b2``, ``binf`` or ``bp:p``."""
    parts = text.strip().split(":")
    if parts[0] in ("b1", "b2", "binf") and len(parts) == 1:
        p = {"b1": 1.0, "b2": 2.0, "binf": math.inf}[parts[0]]
        return lambda n: LpBall(p, n)
    if parts[0] == "bp" and len(parts) == 2:
        p = _parse_p(parts[1])
        return lambda n: LpBall(p, n)
    raise BodySpecError(f"unknown body family {text!r}; use b1, b2, binf or bp:p")
