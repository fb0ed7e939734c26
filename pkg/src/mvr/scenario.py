"""
Scenario files: JSON documents describing the body, the two circular
orbits, the observation window, cost weights and optimizer settings.

Angles are in degrees in the file and radians everywhere else.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .cost import Weights
from .covariance import NoiseModel
from .optimizer import DesignVector, OptimizerSettings, TransferProblem
from .twobody import Direction, GravityModel
from .window import WindowSpec

BUNDLED_DIR = Path(__file__).with_name("scenarios")


class ScenarioError(ValueError):
    """Unreadable or invalid scenario file."""

    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(message)
        self.field_name = field_name


_OPTIMIZER_KEYS = {f.name for f in fields(OptimizerSettings)}


@dataclass(frozen=True)
class ScanSpec:
    dt_range_s: tuple[float, float] = (200.0, 6000.0)
    dtheta_range_deg: tuple[float, float] = (10.0, 170.0)
    dt_points: int = 60
    dtheta_points: int = 60


@dataclass(frozen=True)
class CovarianceSpec:
    q: tuple[float, float, float] = (1e-6, 1e-10, 1e-14)
    r_meas: tuple[float, float] = (1e-2, 1e-6)
    p0: tuple[float, float, float] = (1e-2, 1e-6, 1e-10)
    revolutions: int = 2
    output_points: int = 1001


@dataclass(frozen=True)
class Scenario:
    body: GravityModel
    initial_altitude: float
    final_altitude: float
    direction: Direction
    n_impulses: int
    alpha_deg: float
    weights: Weights
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    seeds: int = 0
    warm_start: bool = True
    forbid_collision: bool = False
    disable_window: bool = False
    initial_guess: DesignVector | None = None
    scan: ScanSpec = field(default_factory=ScanSpec)
    covariance: CovarianceSpec = field(default_factory=CovarianceSpec)

    @property
    def r_initial(self) -> float:
        return self.body.body_radius + self.initial_altitude

    @property
    def r_final(self) -> float:
        return self.body.body_radius + self.final_altitude

    @property
    def window(self) -> WindowSpec | None:
        return None if self.disable_window else WindowSpec(math.radians(self.alpha_deg))

    def problem(self, n: int | None = None) -> TransferProblem:
        return TransferProblem(
            self.body,
            self.r_initial,
            self.r_final,
            self.n_impulses if n is None else n,
            self.weights,
            self.window,
            self.direction,
            self.forbid_collision,
        )

    def noise(self) -> NoiseModel:
        return NoiseModel(self.covariance.q, self.covariance.r_meas)

    def to_dict(self) -> dict:
        """Plain-JSON form accepted by ``from_dict``."""
        out = {
            "body": {"mu": self.body.mu, "radius": self.body.body_radius},
            "initial_orbit": {"altitude": self.initial_altitude, "direction": self.direction.value},
            "final_orbit": {"altitude": self.final_altitude, "direction": self.direction.value},
            "n_impulses": self.n_impulses,
            "window": {"alpha_deg": self.alpha_deg},
            "weights": {"w_ce": self.weights.w_ce, "w_mi": self.weights.w_mi, "w_v": self.weights.w_v},
            "optimizer": {
                **{k: getattr(self.optimizer, k) for k in sorted(_OPTIMIZER_KEYS)},
                "seeds": self.seeds,
                "warm_start": self.warm_start,
            },
            "flags": {"forbid_collision": self.forbid_collision, "disable_window": self.disable_window},
            "scan": {
                "dt_range_s": list(self.scan.dt_range_s),
                "dtheta_range_deg": list(self.scan.dtheta_range_deg),
                "dt_points": self.scan.dt_points,
                "dtheta_points": self.scan.dtheta_points,
            },
            "covariance": {
                "q": list(self.covariance.q),
                "r_meas": list(self.covariance.r_meas),
                "p0": list(self.covariance.p0),
                "revolutions": self.covariance.revolutions,
                "output_points": self.covariance.output_points,
            },
        }
        if self.initial_guess is not None:
            g = self.initial_guess
            out["initial_guess"] = {
                "radii_km": g.radii.tolist(),
                "angles_deg": [math.degrees(a) for a in g.angles],
                "dts_s": g.dts.tolist(),
            }
        return out

    @classmethod
    def from_dict(cls, doc: Any) -> "Scenario":
        return _parse(doc)


# -- validation helpers ------------------------------------------------------


def _section(doc: dict, key: str, required: bool = True) -> dict:
    if key not in doc:
        if required:
            raise ScenarioError(f"missing required field '{key}'", key)
        return {}
    val = doc[key]
    if not isinstance(val, dict):
        raise ScenarioError(f"'{key}' must be an object", key)
    return val


def _number(sec: dict, key: str, path: str, default: Any = None, *, positive=False, nonneg=False) -> float:
    name = f"{path}.{key}"
    if key not in sec:
        if default is None:
            raise ScenarioError(f"missing required field '{name}'", name)
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ScenarioError(f"'{name}' must be a finite number, got {val!r}", name)
    if positive and not val > 0:
        raise ScenarioError(f"'{name}' must be positive, got {val}", name)
    if nonneg and val < 0:
        raise ScenarioError(f"'{name}' must be non-negative, got {val}", name)
    return float(val)


def _integer(sec: dict, key: str, path: str, default: int | None = None, minimum: int = 0) -> int:
    name = f"{path}.{key}" if path else key
    if key not in sec:
        if default is None:
            raise ScenarioError(f"missing required field '{name}'", name)
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"'{name}' must be an integer, got {val!r}", name)
    if val < minimum:
        raise ScenarioError(f"'{name}' must be at least {minimum}, got {val}", name)
    return val


def _flag(sec: dict, key: str, path: str, default: bool) -> bool:
    name = f"{path}.{key}"
    val = sec.get(key, default)
    if not isinstance(val, bool):
        raise ScenarioError(f"'{name}' must be true or false, got {val!r}", name)
    return val


def _vector(sec: dict, key: str, path: str, length: int | None, default=None, nonneg=True) -> tuple[float, ...]:
    name = f"{path}.{key}"
    if key not in sec:
        if default is None:
            raise ScenarioError(f"missing required field '{name}'", name)
        return tuple(default)
    val = sec[key]
    if not isinstance(val, list) or (length is not None and len(val) != length):
        want = f"a list of {length} numbers" if length is not None else "a list of numbers"
        raise ScenarioError(f"'{name}' must be {want}", name)
    out = []
    for i, v in enumerate(val):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or (nonneg and v < 0):
            raise ScenarioError(f"'{name}[{i}]' must be a finite{' non-negative' if nonneg else ''} number", name)
        out.append(float(v))
    return tuple(out)


def _direction(sec: dict, path: str) -> Direction:
    val = sec.get("direction", "ccw")
    try:
        return Direction(str(val).lower())
    except ValueError:
        raise ScenarioError(f"'{path}.direction' must be 'ccw' or 'cw', got {val!r}", f"{path}.direction") from None


def _parse(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")

    body = _section(doc, "body")
    mu = _number(body, "mu", "body", positive=True)
    radius = _number(body, "radius", "body", positive=True)

    init = _section(doc, "initial_orbit")
    final = _section(doc, "final_orbit")
    h0 = _number(init, "altitude", "initial_orbit", positive=True)
    h1 = _number(final, "altitude", "final_orbit", positive=True)
    direction = _direction(init, "initial_orbit")
    if _direction(final, "final_orbit") is not direction:
        raise ScenarioError("initial and final orbits must rotate in the same direction", "final_orbit.direction")

    n = _integer(doc, "n_impulses", "", minimum=2)

    flags = _section(doc, "flags", required=False)
    forbid = _flag(flags, "forbid_collision", "flags", False)
    disable = _flag(flags, "disable_window", "flags", False)

    window = _section(doc, "window", required=not disable)
    alpha = _number(window, "alpha_deg", "window", 90.0 if disable else None)
    if not 0.0 <= alpha <= 90.0:
        raise ScenarioError(f"'window.alpha_deg' must lie in [0, 90], got {alpha}", "window.alpha_deg")

    wsec = _section(doc, "weights")
    wvals = [_number(wsec, k, "weights", d, nonneg=True) for k, d in (("w_ce", 1.0), ("w_mi", 0.0), ("w_v", 0.0))]
    try:
        weights = Weights(*wvals)
    except ValueError as exc:
        raise ScenarioError(f"'weights': {exc}", "weights") from None

    osec = _section(doc, "optimizer", required=False)
    unknown = set(osec) - _OPTIMIZER_KEYS - {"seeds", "warm_start"}
    if unknown:
        name = f"optimizer.{sorted(unknown)[0]}"
        raise ScenarioError(f"unknown field '{name}'", name)
    defaults = OptimizerSettings()
    kwargs = {}
    for key in sorted(_OPTIMIZER_KEYS):
        dflt = getattr(defaults, key)
        if isinstance(dflt, bool):
            kwargs[key] = _flag(osec, key, "optimizer", dflt)
        elif isinstance(dflt, int):
            kwargs[key] = _integer(osec, key, "optimizer", dflt)
        else:
            kwargs[key] = _number(osec, key, "optimizer", dflt)
    try:
        settings = OptimizerSettings(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"'optimizer': {exc}", "optimizer") from None
    seeds = _integer(osec, "seeds", "optimizer", 0)
    warm = _flag(osec, "warm_start", "optimizer", True)

    guess = None
    if "initial_guess" in doc:
        gsec = _section(doc, "initial_guess")
        radii = _vector(gsec, "radii_km", "initial_guess", n - 2, () if n == 2 else None)
        angles = _vector(gsec, "angles_deg", "initial_guess", n - 1, nonneg=False)
        dts = _vector(gsec, "dts_s", "initial_guess", n - 1)
        guess = DesignVector(radii, [math.radians(a) for a in angles], dts)

    ssec = _section(doc, "scan", required=False)
    sdef = ScanSpec()
    scan = ScanSpec(
        _vector(ssec, "dt_range_s", "scan", 2, sdef.dt_range_s),
        _vector(ssec, "dtheta_range_deg", "scan", 2, sdef.dtheta_range_deg),
        _integer(ssec, "dt_points", "scan", sdef.dt_points, minimum=2),
        _integer(ssec, "dtheta_points", "scan", sdef.dtheta_points, minimum=2),
    )
    if not 0 < scan.dt_range_s[0] < scan.dt_range_s[1]:
        raise ScenarioError("'scan.dt_range_s' must be increasing and positive", "scan.dt_range_s")
    if not 0 < scan.dtheta_range_deg[0] < scan.dtheta_range_deg[1] < 180:
        raise ScenarioError("'scan.dtheta_range_deg' must be increasing within (0, 180)", "scan.dtheta_range_deg")

    csec = _section(doc, "covariance", required=False)
    cdef = CovarianceSpec()
    cov = CovarianceSpec(
        _vector(csec, "q", "covariance", 3, cdef.q),
        _vector(csec, "r_meas", "covariance", 2, cdef.r_meas),
        _vector(csec, "p0", "covariance", 3, cdef.p0),
        _integer(csec, "revolutions", "covariance", cdef.revolutions, minimum=1),
        _integer(csec, "output_points", "covariance", cdef.output_points, minimum=2),
    )
    if not all(r > 0 for r in cov.r_meas):
        raise ScenarioError("'covariance.r_meas' entries must be positive", "covariance.r_meas")

    return Scenario(
        GravityModel(mu, radius), h0, h1, direction, n, alpha, weights, settings,
        seeds, warm, forbid, disable, guess, scan, cov,
    )


def apply_override(doc: dict, assignment: str) -> dict:
    """Set a dotted key, e.g. ``weights.w_v=2``; the value is parsed as JSON when possible."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key:
        raise ScenarioError(f"override must look like key=value, got {assignment!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = copy.deepcopy(doc)
    node = out
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ScenarioError(f"cannot override '{key}': '{part}' is not an object", key)
        node = nxt
    node[parts[-1]] = value
    return out


def read_document(path: str | Path) -> dict:
    """Raw JSON object from ``path``; parse errors carry line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if 0 < exc.lineno <= len(text.splitlines()) else ""
        raise ScenarioError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}\n    {' ' * (exc.colno - 1)}^"
        ) from None
    return doc


def load_scenario(path: str | Path, overrides: list[str] | tuple[str, ...] = ()) -> Scenario:
    """Read, override and validate a scenario file.

    Raises:
        ScenarioError: unreadable file, bad JSON, or a field that fails validation.
    """
    doc = read_document(path)
    for item in overrides:
        doc = apply_override(doc, item)
    return _parse(doc)


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``bundled("mars_4imp")``."""
    path = BUNDLED_DIR / (name if name.endswith(".json") else name + ".json")
    if not path.exists():
        raise FileNotFoundError(path)
    return path
