"""Carrying-capacity schedules and shared solver settings.

Every schedule knows its own exact antiderivative and derivative, so
downstream solvers never have to differentiate or integrate the forcing
numerically. Negative capacity values are allowed everywhere; schedules
that dip to zero or below are flagged via ``dips_nonpositive`` but never
clamped.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NonDifferentiableError, ScheduleRangeError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared by the integrators, quadrature and root finding.

    abs_tol / rel_tol bound the local error of adaptive algorithms,
    max_step / min_step bound integrator step sizes, and max_iterations
    caps attempted steps, panel subdivisions, or root-finding iterations
    per call.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_step: float = math.inf
    min_step: float = 1e-13
    max_iterations: int = 10_000

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.min_step < self.max_step):
            raise ValueError("need 0 < min_step < max_step")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


class CapacitySchedule:
    """Base class for capacity schedules M(t).

    Concrete schedules provide ``at``, ``integral``, ``derivative`` and a
    ``period`` attribute (None when the schedule declares no period).
    ``piece_value`` / ``piece_derivative`` evaluate the smooth piece that
    spans the open interval (lo, hi); they exist so integrators can work
    right up to a breakpoint without tripping the two-sided derivative
    error.
    """

    period: float | None = None

    def at(self, t: float) -> float:
        raise NotImplementedError

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral of M over [t0, t1]; requires t0 <= t1."""
        raise NotImplementedError

    def derivative(self, t: float) -> float:
        raise NotImplementedError

    def breakpoints_between(self, t0: float, t1: float) -> list[float]:
        """Non-smooth points strictly inside (t0, t1), ascending."""
        return []

    def piece_value(self, t: float, lo: float, hi: float) -> float:
        return self.at(t)

    def piece_derivative(self, t: float, lo: float, hi: float) -> float:
        return self.derivative(t)

    def min_value(self) -> float:
        raise NotImplementedError

    def max_value(self) -> float:
        raise NotImplementedError

    @property
    def dips_nonpositive(self) -> bool:
        """True when the capacity is not strictly positive everywhere."""
        return self.min_value() <= 0.0


def _require_ordered(t0: float, t1: float) -> None:
    if t1 < t0:
        raise ValueError(f"integral bounds out of order: {t0} > {t1}")


@dataclass(frozen=True)
class Constant(CapacitySchedule):
    """Fixed capacity level. A period may be declared for cycle analysis."""

    m: float
    declared_period: float | None = None

    def __post_init__(self) -> None:
        if self.declared_period is not None and not self.declared_period > 0.0:
            raise ValueError("declared_period must be positive")

    @property
    def period(self) -> float | None:
        return self.declared_period

    def at(self, t: float) -> float:
        return self.m

    def integral(self, t0: float, t1: float) -> float:
        _require_ordered(t0, t1)
        return self.m * (t1 - t0)

    def derivative(self, t: float) -> float:
        return 0.0

    def min_value(self) -> float:
        return self.m

    def max_value(self) -> float:
        return self.m


@dataclass(frozen=True)
class TwoPhase(CapacitySchedule):
    """Square-wave capacity: m1 on the first half of each cycle, m2 on the second.

    Pieces are left-closed and right-open, so the value exactly at a
    switch time belongs to the piece that starts there. The pattern
    repeats with the given period for all t, negative times included.
    """

    m1: float
    m2: float
    period: float

    def __post_init__(self) -> None:
        if not self.period > 0.0:
            raise ValueError("period must be positive")

    def _phase(self, t: float) -> float:
        tau = t % self.period
        if tau >= self.period:  # guard against rounding at the wrap point
            tau -= self.period
        return tau

    def at(self, t: float) -> float:
        return self.m1 if self._phase(t) < 0.5 * self.period else self.m2

    def _cumulative(self, t: float) -> float:
        # antiderivative anchored at 0, exact up to float rounding
        k = math.floor(t / self.period)
        tau = min(max(t - k * self.period, 0.0), self.period)
        half = 0.5 * self.period
        full_cycles = k * (self.m1 + self.m2) * half
        return full_cycles + self.m1 * min(tau, half) + self.m2 * max(0.0, tau - half)

    def integral(self, t0: float, t1: float) -> float:
        _require_ordered(t0, t1)
        return self._cumulative(t1) - self._cumulative(t0)

    def derivative(self, t: float) -> float:
        tau = self._phase(t)
        if tau == 0.0 or tau == 0.5 * self.period:
            raise NonDifferentiableError(f"capacity jumps at t={t}")
        return 0.0

    def breakpoints_between(self, t0: float, t1: float) -> list[float]:
        half = 0.5 * self.period
        k = math.floor(t0 / half)
        out: list[float] = []
        while True:
            k += 1
            b = k * half
            if b >= t1:
                break
            if b > t0:
                out.append(b)
        return out

    def piece_value(self, t: float, lo: float, hi: float) -> float:
        return self.at(0.5 * (lo + hi))

    def piece_derivative(self, t: float, lo: float, hi: float) -> float:
        return 0.0

    def min_value(self) -> float:
        return min(self.m1, self.m2)

    def max_value(self) -> float:
        return max(self.m1, self.m2)


@dataclass(frozen=True)
class SinusoidOffset(CapacitySchedule):
    """Capacity mean + amplitude * sin(2*pi*t/period)."""

    mean: float
    amplitude: float
    period: float

    def __post_init__(self) -> None:
        if not self.period > 0.0:
            raise ValueError("period must be positive")

    def _angle(self, t: float) -> float:
        # reduce phase before scaling so large t keeps full precision
        return TWO_PI * ((t % self.period) / self.period)

    def at(self, t: float) -> float:
        return self.mean + self.amplitude * math.sin(self._angle(t))

    def integral(self, t0: float, t1: float) -> float:
        _require_ordered(t0, t1)
        scale = self.period / TWO_PI
        swing = math.cos(self._angle(t0)) - math.cos(self._angle(t1))
        return self.mean * (t1 - t0) + self.amplitude * scale * swing

    def derivative(self, t: float) -> float:
        return self.amplitude * (TWO_PI / self.period) * math.cos(self._angle(t))

    def min_value(self) -> float:
        return self.mean - abs(self.amplitude)

    def max_value(self) -> float:
        return self.mean + abs(self.amplitude)


@dataclass(frozen=True, eq=False)
class Tabulated(CapacitySchedule):
    """Piecewise-linear capacity through sampled (time, value) points.

    Queries outside the sampled range raise ScheduleRangeError rather
    than extrapolating. Integrals are the exact trapezoid areas of the
    interpolant, including partial end segments.
    """

    times: np.ndarray
    values: np.ndarray
    declared_period: float | None = None
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if t.size < 2:
            raise ValueError("need at least two samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("samples must be finite")
        if not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        if self.declared_period is not None and not self.declared_period > 0.0:
            raise ValueError("declared_period must be positive")
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))))
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def from_pairs(
        cls, pairs: "list[tuple[float, float]]", declared_period: float | None = None
    ) -> "Tabulated":
        t = np.array([p[0] for p in pairs], dtype=float)
        v = np.array([p[1] for p in pairs], dtype=float)
        return cls(t, v, declared_period)

    @property
    def period(self) -> float | None:
        return self.declared_period

    def _check(self, t: float) -> None:
        if t < self.times[0] or t > self.times[-1]:
            raise ScheduleRangeError(
                f"t={t} outside sampled range [{self.times[0]}, {self.times[-1]}]"
            )

    def _segment(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(k, 0), self.times.size - 2)

    def at(self, t: float) -> float:
        self._check(t)
        return float(np.interp(t, self.times, self.values))

    def _cumulative(self, t: float) -> float:
        k = self._segment(t)
        return float(self._cum[k] + (t - self.times[k]) * 0.5 * (self.values[k] + self.at(t)))

    def integral(self, t0: float, t1: float) -> float:
        _require_ordered(t0, t1)
        self._check(t0)
        self._check(t1)
        return self._cumulative(t1) - self._cumulative(t0)

    def derivative(self, t: float) -> float:
        self._check(t)
        idx = int(np.searchsorted(self.times, t))
        if idx < self.times.size and self.times[idx] == t:
            raise NonDifferentiableError(f"capacity has a sample kink at t={t}")
        k = self._segment(t)
        return float(
            (self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k])
        )

    def breakpoints_between(self, t0: float, t1: float) -> list[float]:
        return [float(b) for b in self.times if t0 < b < t1]

    def piece_value(self, t: float, lo: float, hi: float) -> float:
        k = self._segment(0.5 * (lo + hi))
        slope = (self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k])
        return float(self.values[k] + slope * (t - self.times[k]))

    def piece_derivative(self, t: float, lo: float, hi: float) -> float:
        k = self._segment(0.5 * (lo + hi))
        return float(
            (self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k])
        )

    def min_value(self) -> float:
        return float(self.values.min())

    def max_value(self) -> float:
        return float(self.values.max())


def load_capacity_csv(path: str | Path) -> Tabulated:
    """Read a tabulated schedule from CSV with a header naming columns t and M.

    Extra columns are ignored, so files produced by the simulate command
    (t, P, M) can be fed straight back in.
    """
    rows: list[list[str]] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row and any(cell.strip() for cell in row):
                rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty schedule file")
    header = [cell.strip().lower() for cell in rows[0]]
    if "t" not in header or "m" not in header:
        raise ValueError(f"{path}: header must name columns t and M")
    it, im = header.index("t"), header.index("m")
    try:
        pairs = [(float(row[it]), float(row[im])) for row in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed schedule row ({exc})") from None
    if len(pairs) < 2:
        raise ValueError(f"{path}: need at least two data rows")
    return Tabulated.from_pairs(pairs)


def parse_schedule(text: str) -> CapacitySchedule:
    """Build a schedule from the plain-text grammar used by the CLI.

    Forms: ``constant:M``, ``twophase:M1,M2,period``,
    ``sinusoid:mean,amplitude,period``, ``table:path.csv``.
    """
    head, sep, rest = text.partition(":")
    head = head.strip().lower()
    if not sep:
        raise ValueError(f"schedule {text!r} is missing ':'")
    if head == "table":
        return load_capacity_csv(rest.strip())
    try:
        args = [float(part) for part in rest.split(",")]
    except ValueError:
        raise ValueError(f"schedule {text!r} has non-numeric parameters") from None
    if head == "constant":
        if len(args) != 1:
            raise ValueError("constant schedule takes exactly one value")
        return Constant(args[0])
    if head == "twophase":
        if len(args) != 3:
            raise ValueError("twophase schedule takes m1,m2,period")
        return TwoPhase(args[0], args[1], args[2])
    if head == "sinusoid":
        if len(args) != 3:
            raise ValueError("sinusoid schedule takes mean,amplitude,period")
        return SinusoidOffset(args[0], args[1], args[2])
    raise ValueError(f"unknown schedule kind {head!r}")
