"""Unit-step discrete counterpart P_{k+1} = P_k + r (M - P_k) P_k.

The composite growth factor rho = r * M is the only control that
matters: the substitution x = r P / (1 + rho) turns the update into the
standard quadratic map x -> (1 + rho) x (1 - x), an exact algebraic
identity used both for normalization and for testing. Divergence is
data here, never an exception: orbits that leave the basin are returned
with a flag.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def normalized_state(r: float, m: float, p: float) -> float:
    """Map population to the conjugate quadratic-map coordinate."""
    return r * p / (1.0 + r * m)


def iterate_map(r: float, m: float, p0: float, n: int) -> np.ndarray:
    """First n updates starting from p0; returns n + 1 values including p0.

    Values are reported as computed even when the orbit diverges;
    overflow shows up as inf/nan entries.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.empty(n + 1)
    p = float(p0)
    out[0] = p
    for k in range(1, n + 1):
        p = p + r * (m - p) * p
        out[k] = p
    return out


def has_escaped(r: float, m: float, values: np.ndarray, escape_bound: float = 10.0) -> bool:
    """True when any normalized value leaves [-bound, bound] or is non-finite."""
    x = normalized_state(r, m, np.asarray(values, dtype=float))
    return bool(np.any(~np.isfinite(x)) or np.any(np.abs(x) > escape_bound))


@dataclass(frozen=True, eq=False)
class BifurcationRecord:
    """Attractor summary at one control value rho = r * m.

    detected_period is None for aperiodic or diverged orbits; diverged
    orbits additionally carry the flag and claim no period.
    """

    control: float
    attractor: np.ndarray
    detected_period: int | None
    diverged: bool = False


@dataclass(frozen=True)
class ScanConfig:
    transient: int = 10_000
    window: int = 512
    match_tol: float = 1e-9
    escape_bound: float = 10.0

    def __post_init__(self) -> None:
        if self.transient < 0 or self.window < 4:
            raise ValueError("need transient >= 0 and window >= 4")
        if not (self.match_tol > 0.0 and self.escape_bound > 0.0):
            raise ValueError("match_tol and escape_bound must be positive")


def detect_attractor(
    r: float,
    m: float,
    p0: float,
    transient: int = 10_000,
    window: int = 512,
    match_tol: float = 1e-9,
    escape_bound: float = 10.0,
) -> BifurcationRecord:
    """Classify the long-run orbit from p0.

    After discarding the transient, the smallest period p <= window/2
    whose shifted window matches within match_tol (measured on the
    normalized coordinate) is reported; the attractor then holds the
    distinct values of one cycle. Without a match the whole window is
    returned and the orbit is labeled aperiodic (period None).
    """
    control = r * m
    unit = 1.0 + control
    p = float(p0)
    last_finite = p
    for _ in range(transient):
        p = p + r * (m - p) * p
        if not np.isfinite(p) or abs(r * p / unit) > escape_bound:
            return BifurcationRecord(control, np.array([last_finite]), None, diverged=True)
        last_finite = p
    w = np.empty(window)
    w[0] = p
    for k in range(1, window):
        p = p + r * (m - p) * p
        if not np.isfinite(p) or abs(r * p / unit) > escape_bound:
            return BifurcationRecord(control, w[:k].copy(), None, diverged=True)
        w[k] = p
    x = r * w / unit
    for period in range(1, window // 2 + 1):
        if float(np.max(np.abs(x[period:] - x[:-period]))) <= match_tol:
            cycle = w[-period:]
            order = np.argsort(x[-period:])
            xs = x[-period:][order]
            keep = np.concatenate(([True], np.diff(xs) > match_tol))
            return BifurcationRecord(control, cycle[order][keep].copy(), period)
    return BifurcationRecord(control, w.copy(), None)


@dataclass(frozen=True, eq=False)
class ScanResult:
    records: list[BifurcationRecord]
    doubling_1_to_2: float | None = None
    doubling_2_to_4: float | None = None


def bifurcation_scan(
    rho_start: float,
    rho_stop: float,
    steps: int,
    cfg: ScanConfig | None = None,
    r_fixed: float = 1.0,
) -> ScanResult:
    """Sweep the control rho = r * m at fixed r, tracking the attractor.

    The seed for each point is the previous attractor carried over in
    the normalized coordinate, so branches are followed continuously.
    Also reports the first control values where the detected period
    changes 1 -> 2 and 2 -> 4 between adjacent points (midpoint of the
    bracketing pair), when present in the range.
    """
    if steps < 2:
        raise ValueError("need at least two scan points")
    if not r_fixed > 0.0:
        raise ValueError("r_fixed must be positive")
    cfg = cfg or ScanConfig()
    rhos = np.linspace(rho_start, rho_stop, steps)
    records: list[BifurcationRecord] = []
    x_seed = None
    for rho in rhos:
        m = float(rho) / r_fixed
        if x_seed is None or not (0.0 < x_seed < 1.0):
            p0 = 0.5 * m
        else:
            p0 = x_seed * (1.0 + float(rho)) / r_fixed
        rec = detect_attractor(
            r_fixed,
            m,
            p0,
            transient=cfg.transient,
            window=cfg.window,
            match_tol=cfg.match_tol,
            escape_bound=cfg.escape_bound,
        )
        records.append(rec)
        if rec.diverged or rec.attractor.size == 0:
            x_seed = None
        else:
            x_seed = normalized_state(r_fixed, m, float(rec.attractor[0]))
    d12 = _first_transition(records, 1, 2)
    d24 = _first_transition(records, 2, 4)
    return ScanResult(records, d12, d24)


def _first_transition(records, before: int, after: int) -> float | None:
    # Exactly at a doubling point convergence is algebraic, so a grid
    # point that lands there is reported unresolved (period None). Such
    # records are skipped: the transition is still bracketed by the
    # nearest resolved records on either side.
    for i, prev in enumerate(records[:-1]):
        if prev.detected_period != before:
            continue
        j = i + 1
        while (
            j < len(records)
            and records[j].detected_period is None
            and not records[j].diverged
        ):
            j += 1
        if j < len(records) and records[j].detected_period == after:
            return 0.5 * (prev.control + records[j].control)
    return None
