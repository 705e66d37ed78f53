"""Measurements on sampled curves: decay time, tail fluctuations, envelopes, returns.

All estimates come from sampled curves and are good to one grid spacing.
Pick grids with at least 20 points per ``2 pi / g_max``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .closed_form import Curve, r1, sample_curve
from .model import ModelConfig, TimeGrid

DEFAULT_THRESHOLD = math.exp(-1.0)
DEFAULT_PERSISTENCE = 5


@dataclass(frozen=True)
class DecoherenceReport:
    decoherence_time: float | None
    threshold: float
    fluctuation_rms: float
    fluctuation_max: float
    recurrence_time: float | None


class Envelope(NamedTuple):
    min_product: float
    max_product: float
    # whether all per-particle minima can occur at one instant
    simultaneous: bool


def _first_sustained(below: np.ndarray, persistence: int) -> int | None:
    """Index of the first run of ``persistence + 1`` True values."""
    width = persistence + 1
    if below.size < width:
        return None
    hits = np.flatnonzero(sliding_window_view(below, width).all(axis=1))
    return int(hits[0]) if hits.size else None


def decoherence_time(
    curve: Curve,
    threshold: float = DEFAULT_THRESHOLD,
    persistence: int = DEFAULT_PERSISTENCE,
) -> float | None:
    """First grid time at which the curve drops strictly below ``threshold``
    and stays there for the following ``persistence`` samples.

    The curve should hold a real, non-negative decay metric such as
    ``|r1|^2``; only the real part is looked at.
    """
    values = curve.values.real
    if not 0.0 < threshold < values[0]:
        raise ValueError(
            f"threshold {threshold!r} must lie in (0, {values[0]!r}), the curve's starting value"
        )
    if persistence < 0:
        raise ValueError("persistence must be >= 0")
    i = _first_sustained(values < threshold, persistence)
    return None if i is None else float(curve.times[i])


def fluctuation_stats(curve: Curve, t_from: float) -> tuple[float, float]:
    """RMS and maximum absolute value of the real part over ``t >= t_from``."""
    times = curve.times
    tail = curve.values.real[times >= t_from]
    if tail.size == 0:
        raise ValueError(f"no grid points at or after t_from={t_from!r}")
    return float(np.sqrt(np.mean(tail ** 2))), float(np.max(np.abs(tail)))


def factor_minima(config: ModelConfig) -> np.ndarray:
    p_up = np.abs(config.alpha) ** 2
    return (2.0 * p_up - 1.0) ** 2


def envelope_bounds(config: ModelConfig) -> Envelope:
    """Bounds on ``|r1(t)|^2`` built from the per-particle extremes.

    Every factor of ``|r1|^2`` swings between ``(2|alpha|^2 - 1)^2`` and 1.
    ``min_product`` multiplies the factor minima; with incommensurate couplings
    those minima never line up, so ``simultaneous`` is False and the product
    is a floor rather than an attained value.
    """
    g = config.g
    simultaneous = config.n == 1 or bool(np.all(g == g[0]))
    return Envelope(float(np.prod(factor_minima(config))), 1.0, simultaneous)


def _excursion_peak(values: np.ndarray, start: int, threshold: float) -> int | None:
    above = np.flatnonzero(values[start:] >= threshold)
    if above.size == 0:
        return None
    first = start + int(above[0])
    below_after = np.flatnonzero(values[first:] < threshold)
    stop = first + int(below_after[0]) if below_after.size else values.size
    return first + int(np.argmax(values[first:stop]))


def curve_recurrence(
    curve: Curve,
    threshold: float,
    persistence: int = DEFAULT_PERSISTENCE,
) -> float | None:
    """Time of the first return of the curve to ``>= threshold`` after it has decayed.

    Decay is the first sustained drop below ``threshold``.  The return is
    reported at the highest sample of the first excursion back above it,
    which is where the curve comes closest to its starting value.
    """
    values = curve.values.real
    if not 0.0 < threshold < values[0]:
        raise ValueError(f"threshold {threshold!r} must lie in (0, {values[0]!r})")
    dep = _first_sustained(values < threshold, persistence)
    if dep is None:
        return None
    peak = _excursion_peak(values, dep, threshold)
    return None if peak is None else float(curve.times[peak])


def recurrence_search(
    config: ModelConfig,
    metric: Callable[[ModelConfig, np.ndarray], np.ndarray],
    threshold: float,
    window: TimeGrid,
    persistence: int = DEFAULT_PERSISTENCE,
) -> float | None:
    """Search ``window`` for the first recurrence of ``metric(config, t)``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")
    curve = sample_curve(lambda t: metric(config, t), window)
    return curve_recurrence(curve, threshold, persistence)


def return_amplitude(config: ModelConfig, t):
    """``Re r1(t)``: equals 1 only when every factor of ``r1`` is back in phase.

    Unlike ``|r1|^2`` it does not count a sign flip of ``r1`` as a return.
    """
    return np.real(r1(config, t))


def normalized_metric(curve: Curve) -> Curve:
    """``|v(t)|^2 / |v(t_start)|^2``, or the bare ``|v|^2`` when ``v(t_start) = 0``."""
    abs2 = curve.abs2
    if abs2[0] > 0.0:
        abs2 = abs2 / abs2[0]
    return Curve(curve.grid, abs2)


def analyze(
    curve: Curve,
    threshold: float = DEFAULT_THRESHOLD,
    persistence: int = DEFAULT_PERSISTENCE,
    recurrence_threshold: float = 0.5,
) -> DecoherenceReport:
    """Report on the normalised squared modulus of ``curve``.

    For ``r1`` this is exactly ``|r1|^2``; for a case-2 phasor it is constant.
    Tail statistics start at the decoherence time, or at the grid start when
    the curve never decoheres.
    """
    m = normalized_metric(curve)
    t_dec = recurrence = None
    if 0.0 < threshold < m.values.real[0]:
        t_dec = decoherence_time(m, threshold, persistence)
        if recurrence_threshold < m.values.real[0]:
            recurrence = curve_recurrence(m, recurrence_threshold, persistence)
    t_from = curve.grid.t_start if t_dec is None else t_dec
    rms, peak = fluctuation_stats(m, t_from)
    return DecoherenceReport(t_dec, threshold, rms, peak, recurrence)
