import hashlib
import json
import math
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

import numpy as np

from exceptions import ValidationError


def parse_real(s: Optional[str], name: str = "value") -> float:
    # decimal literals only, e.g. "9.797958971132712" for 4*sqrt(6)
    if s is None:
        raise ValidationError(f"missing {name}")
    try:
        value = float(str(s).strip())
    except ValueError:
        raise ValidationError(f"{name} must be a decimal literal, got {s!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {s!r}")
    return value


def parse_range(s: str, name: str = "range") -> Tuple[float, float]:
    """
    Parse "lo:hi" into a pair of floats with lo < hi.
    """
    parts = str(s).split(":")
    if len(parts) != 2:
        raise ValidationError(f"{name} must look like LO:HI, got {s!r}")
    lo, hi = parse_real(parts[0], name), parse_real(parts[1], name)
    if not lo < hi:
        raise ValidationError(f"{name} needs LO < HI, got {s!r}")
    return lo, hi


def parse_resolution(s: str) -> Tuple[int, int]:
    parts = str(s).lower().split("x")
    if len(parts) != 2:
        raise ValidationError(f"resolution must look like N1xN2, got {s!r}")
    try:
        n1, n2 = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"resolution must look like N1xN2, got {s!r}")
    return n1, n2


def parse_patch(s: str) -> Tuple[float, float, float, float]:
    # "u1a:u1b,u2a:u2b"
    parts = str(s).split(",")
    if len(parts) != 2:
        raise ValidationError(f"patch must look like U1A:U1B,U2A:U2B, got {s!r}")
    u1 = parse_range(parts[0], "patch u1")
    u2 = parse_range(parts[1], "patch u2")
    return u1[0], u1[1], u2[0], u2[1]


def parse_steps(s: str) -> Tuple[float, ...]:
    steps = tuple(parse_real(part, "step") for part in str(s).split(","))
    if any(h <= 0 for h in steps):
        raise ValidationError(f"steps must be positive, got {s!r}")
    return steps


def parse_coeffs(s: str) -> Tuple[str, Dict[str, float]]:
    """
    Parse a coefficient spec.

    Accepted forms:
        a1=..,b1=..,a2=..,b2=..     general coefficients
        A1=..,B1=..                 normalized (c != -1)
        A1=..,a2=..,b2=..           normalized (c = -1)
        singular[:+1|-1]            singular-normalized, default epsilon1 = +1

    Returns:
        (mode, values) with mode in {"general", "normalized", "singular"}
    """
    text = str(s).strip()
    if text.lower().startswith("singular"):
        tail = text[len("singular"):]
        if not tail:
            return "singular", {"epsilon1": 1}
        if not tail.startswith(":"):
            raise ValidationError(f"singular coefficients look like singular:+1 or singular:-1, got {s!r}")
        eps = parse_real(tail[1:], "epsilon1")
        if eps not in (1.0, -1.0):
            raise ValidationError(f"epsilon1 must be +1 or -1, got {tail[1:]!r}")
        return "singular", {"epsilon1": int(eps)}

    values: Dict[str, float] = {}
    for item in text.split(","):
        if "=" not in item:
            raise ValidationError(f"coefficient items look like KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key in values:
            raise ValidationError(f"duplicate coefficient {key!r}")
        values[key] = parse_real(raw, key)

    keys = set(values)
    if keys == {"a1", "b1", "a2", "b2"}:
        return "general", values
    if keys == {"A1", "B1"} or keys == {"A1", "a2", "b2"}:
        return "normalized", values
    raise ValidationError(f"unrecognised coefficient set {sorted(keys)}; use a1,b1,a2,b2 | A1,B1 | A1,a2,b2 | singular:eps")


def rational_approx(x: float, max_denominator: int, tol: float) -> Optional[Tuple[int, int]]:
    """
    Best continued-fraction approximation n/m of x with m <= max_denominator.
    Returns None when no such fraction is within tol of x ("irrational within tolerance").
    """
    if not math.isfinite(x):
        return None
    frac = Fraction(x).limit_denominator(max_denominator)
    if abs(float(frac) - x) <= tol * max(1.0, abs(x)):
        return frac.numerator, frac.denominator
    return None


def fmt17(v: float) -> str:
    # locale-independent, round-trips float64
    return f"{float(v):.17g}"


def json_ready(obj: Any) -> Any:
    """Replace non-finite floats with None and tuples with lists, recursively."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, np.ndarray):
        return json_ready(obj.tolist())
    if isinstance(obj, np.generic):
        return json_ready(obj.item())
    return obj


def canonical_json(obj: Any, indent: Optional[int] = 2) -> str:
    if indent is None:
        return json.dumps(json_ready(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return json.dumps(json_ready(obj), sort_keys=True, indent=indent, allow_nan=False)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
