"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

import math
from os import PathLike
from typing import Any

from .model import Instance, Sla, instance_from_dict, parse_instance


def check_instance(X: Any) -> Instance:
    """Accept an Instance, a path to an instance file or a decoded document."""
    if isinstance(X, Instance):
        return X
    if isinstance(X, (str, PathLike)):
        return parse_instance(X)
    if isinstance(X, dict):
        return instance_from_dict(X)
    raise TypeError(f"expected an Instance, a path or a dict, got {type(X).__name__}")


def check_lambda(lam: Any) -> float:
    if isinstance(lam, bool):
        raise TypeError("lambda must be a real number")
    lam = float(lam)
    if not (math.isfinite(lam) and 0.0 <= lam <= 1.0):
        raise ValueError(f"lambda must lie in [0, 1], got {lam!r}")
    return lam


def check_cutoff(cutoff_ms: Any) -> float | None:
    if cutoff_ms is None:
        return None
    cutoff_ms = float(cutoff_ms)
    if not cutoff_ms > 0:
        raise ValueError(f"cutoff must be > 0 ms, got {cutoff_ms!r}")
    return cutoff_ms


def with_lambda(instance: Instance, lam: float | None) -> Instance:
    """Instance with its SLA weight replaced (or unchanged when ``lam`` is None)."""
    if lam is None:
        return instance
    sla = instance.sla
    return instance.with_sla(Sla(sla.max_s, sla.max_e, check_lambda(lam)))
