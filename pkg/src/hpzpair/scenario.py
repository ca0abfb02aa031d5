"""Scenarios: parameter sets plus a time grid, evaluated in one pass.

Scenario files are flat ``key = value`` text.  Blank lines and ``#``
comments are ignored, numbers may be written as fractions (``1/128``), and
unknown keys are rejected.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .coefficients import MarkovCoefficients, PhysicalParams, RegimeTag, check_stability, coefficients
from .covariance import Covariance4, W
from .errors import GridTooCoarse, InvalidInput, NonPhysicalSpectrum, StabilityError
from .gaussian import DEFAULT_TOL, REPORT_FIELDS, TAU, epr_initial, info_table, reports_from_table, symplectic_eigenvalues
from .propagator import MarkovPropagator

PARAM_KEYS = tuple(f.name for f in fields(PhysicalParams))
SCENARIO_KEYS = ("name", "regime", "p", "r_s", "t_start", "t_end", "n_points", "spacing", "outputs", "tol")
REFINE_XTOL = 1e-7


@dataclass(frozen=True)
class Scenario:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    regime: RegimeTag = RegimeTag.EXACT_FINITE_T
    p: float = 1.0
    r_s: float = 0.0
    t_start: float = 0.0
    t_end: float = 100.0
    n_points: int = 2001
    spacing: str = "linear"
    outputs: tuple = REPORT_FIELDS[1:]
    tol: float = DEFAULT_TOL
    name: str = ""

    def __post_init__(self):
        if self.n_points < 2:
            raise InvalidInput("n_points must be >= 2")
        if not (0 <= self.t_start < self.t_end) or not math.isfinite(self.t_end):
            raise InvalidInput(f"need 0 <= t_start < t_end, got [{self.t_start}, {self.t_end}]")
        if self.spacing not in ("linear", "log"):
            raise InvalidInput(f"spacing must be linear or log, got {self.spacing!r}")
        if self.spacing == "log" and self.t_start <= 0:
            raise InvalidInput("log spacing needs t_start > 0")
        if self.p < 1:
            raise InvalidInput(f"p must be >= 1, got {self.p}")
        if not self.tol > 0:
            raise InvalidInput("tol must be positive")
        bad = [q for q in self.outputs if q not in REPORT_FIELDS or q == "t"]
        if bad:
            raise InvalidInput(f"unknown output quantities: {bad}")

    @property
    def times(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.t_start, self.t_end, self.n_points)
        return np.linspace(self.t_start, self.t_end, self.n_points)

    def initial_state(self) -> Covariance4:
        return epr_initial(self.p, self.r_s)

    def with_values(self, **kv) -> "Scenario":
        """Copy with fields replaced; physical parameter names are accepted too."""
        phys = {k: v for k, v in kv.items() if k in PARAM_KEYS}
        rest = {k: v for k, v in kv.items() if k not in PARAM_KEYS}
        unknown = set(rest) - set(SCENARIO_KEYS)
        if unknown:
            raise InvalidInput(f"unknown keys: {sorted(unknown)}")
        params = replace(self.params, **phys) if phys else self.params
        return replace(self, params=params, **rest)


def _number(key: str, text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError:
            raise InvalidInput(f"{key}: cannot parse number {text!r}") from None


def coerce(key: str, text: str):
    """Convert the text of one ``key = value`` entry to the field's type."""
    if key in PARAM_KEYS or key in ("p", "r_s", "t_start", "t_end", "tol"):
        return _number(key, text)
    if key == "n_points":
        v = _number(key, text)
        if v != int(v):
            raise InvalidInput(f"n_points must be an integer, got {text!r}")
        return int(v)
    if key == "regime":
        return RegimeTag.parse(text.strip())
    if key == "outputs":
        return tuple(q.strip() for q in text.split(",") if q.strip())
    if key in ("spacing", "name"):
        return text.strip()
    raise InvalidInput(f"unknown key {key!r}")


def parse_scenario(text: str) -> Scenario:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in PARAM_KEYS and key not in SCENARIO_KEYS:
            raise InvalidInput(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise InvalidInput(f"line {lineno}: duplicate key {key!r}")
        values[key] = coerce(key, val)
    try:
        return Scenario().with_values(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(str(exc)) from exc


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    scenario: Scenario
    coeffs: MarkovCoefficients
    propagator: MarkovPropagator
    table: dict

    def reports(self):
        return reports_from_table(self.table)


def build_propagator(scenario: Scenario, allow_unstable: bool = False) -> MarkovPropagator:
    coeffs = coefficients(scenario.params, scenario.regime)
    report = check_stability(coeffs)
    if not report.stable and not allow_unstable:
        raise StabilityError("stability check failed: " + ", ".join(report.failures()))
    return MarkovPropagator(coeffs)


def evaluate_grid(scenario: Scenario, allow_unstable: bool = False) -> ScenarioResult:
    """Closed-form covariances and information quantities on the whole grid."""
    prop = build_propagator(scenario, allow_unstable)
    times = scenario.times
    sig = prop.evolve_many(scenario.initial_state(), times)
    return ScenarioResult(scenario, prop.coeffs, prop, info_table(times, sig, scenario.tol))


def run_scenario(scenario: Scenario, allow_unstable: bool = False):
    """Stream of :class:`InfoReport` rows in time order."""
    return evaluate_grid(scenario, allow_unstable).reports()


# ---------------------------------------------------------------------------
# transitions
# ---------------------------------------------------------------------------

CHANNELS = {
    "separability": ("nu1_pt", "entangle", "disentangle"),
    "positivity": ("nu1", "positivity_loss", "positivity_gain"),
}


@dataclass(frozen=True)
class TransitionEvent:
    kind: str
    t: float
    channel: str


def _pointwise(prop: MarkovPropagator, sigma0: Covariance4, channel: str):
    def f(t):
        s = prop.evolve(sigma0, t).sigma
        if channel == "positivity":
            return symplectic_eigenvalues(s).nu1
        lab = W @ s @ W.T
        return symplectic_eigenvalues(TAU @ lab @ TAU).nu1

    return f


def detect_transitions(result: ScenarioResult, channel: str = "separability") -> list[TransitionEvent]:
    """Crossings of nu - (1 - tol) for ``nu1_pt`` or ``nu1``.

    Sign changes are bracketed on the grid and then refined with Brent's
    method on the closed-form pipeline to 1e-7 in time.  Falling below the
    threshold is an ``entangle`` (``positivity_loss``) event; rising back is
    ``disentangle`` (``positivity_gain``).
    """
    if channel not in CHANNELS:
        raise InvalidInput(f"unknown channel {channel!r}")
    column, down, up = CHANNELS[channel]
    times = np.asarray(result.table["t"])
    thr = 1.0 - result.scenario.tol
    g = np.asarray(result.table[column]) - thr
    below = g < 0
    idx = np.flatnonzero(below[1:] != below[:-1])
    f = _pointwise(result.propagator, result.scenario.initial_state(), channel)

    def h(t):
        try:
            return f(t) - thr
        except NonPhysicalSpectrum:
            return math.nan

    events = []
    for i in idx:
        a, b = float(times[i]), float(times[i + 1])
        try:
            t = brentq(h, a, b, xtol=REFINE_XTOL, rtol=4 * np.finfo(float).eps)
        except ValueError:
            t = 0.5 * (a + b)
        events.append(TransitionEvent(down if below[i + 1] else up, t, channel))

    steps = np.diff(times)
    for e1, e2 in zip(events, events[1:]):
        j = min(np.searchsorted(times, e1.t), len(steps) - 1)
        if e2.t - e1.t < 3 * steps[j]:
            warnings.warn(
                f"{channel} events at t={e1.t:.6g} and t={e2.t:.6g} are within 3 grid steps",
                GridTooCoarse,
                stacklevel=2,
            )
            break
    return events


def separability_onset(result: ScenarioResult, events: list[TransitionEvent] | None = None) -> float | None:
    """Last disentangle time with no later entangle event in the window.

    ``None`` when the state is still entangled at the end of the window or
    never disentangles.  A state separable from t_start onwards with no
    events gives ``t_start``.
    """
    if events is None:
        events = detect_transitions(result, "separability")
    sep = [e for e in events if e.channel == "separability"]
    final_entangled = bool(np.asarray(result.table["nu1_pt"])[-1] < 1.0 - result.scenario.tol)
    if final_entangled:
        return None
    if not sep:
        return float(result.table["t"][0])
    last = sep[-1]
    return last.t if last.kind == "disentangle" else None


def event_spacings(events: list[TransitionEvent], kind: str) -> np.ndarray:
    return np.diff([e.t for e in events if e.kind == kind])
