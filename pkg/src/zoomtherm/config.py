"""Flat ``key = value`` run configuration with dotted keys.

Example::

    map.name = quadratic
    map.params.a = 2
    contraction.sigma = 0.9
    nest.balls = 0.333:0.05, 0.6:0.04
    scheme.base = 0.0, 0.5
    potential.kind = geometric
    potential.t = -1

Lines starting with ``#`` are comments.  Lists are comma separated; a
hole or ball list uses ``;`` or ``,`` between entries and ``:`` inside one.
``scheme.base`` is ``lo, hi``, ``whole`` (the map itself, onto branches
only) or ``nest`` (the shrunken ball ``scheme.ball`` of the nested
collection, with the balls listed in ``nest.hole`` as the hole).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .dynamics import MapModel, builtin_map
from .errors import ConfigError
from .intervals import Interval
from .potentials import PotentialSpec
from .settings import MAX_PREIMAGES, TOL_EQ, TOL_INV, TOL_MEAS
from .zooming import ZoomingContraction

BUILTIN_MAPS = ("doubling", "shift2", "tent", "quadratic")

_KNOWN = {
    "map.name", "contraction.sigma", "contraction.delta", "contraction.epsilon",
    "hyp.points", "hyp.nmax", "nest.balls", "nest.epsilon", "nest.cutoff", "nest.hole",
    "scheme.base", "scheme.ball", "scheme.cutoff", "scheme.mode", "scheme.prune",
    "thermo.nsym", "thermo.depth", "thermo.nmax", "thermo.tol",
    "potential.kind", "potential.t", "potential.c",
    "grid.depth", "conformal.exactness", "escape.hole", "escape.nmax",
    "tol.inv", "tol.meas", "tol.eq", "limits.max_preimages",
    "output.dir", "output.format",
}


def parse_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"line {num}: expected 'key = value'")
        if key in out:
            raise ConfigError(f"line {num}: duplicate key {key!r}")
        out[key] = val
    return out


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: cannot parse {text!r}") from None


def _pairs(text: str, what: str) -> list[tuple[float, float]]:
    items = [s for s in text.replace(";", ",").split(",") if s.strip()]
    out = []
    for s in items:
        a, sep, b = s.partition(":")
        if not sep:
            raise ConfigError(f"{what}: entries look like 'a:b', got {s!r}")
        try:
            out.append((float(a), float(b)))
        except ValueError:
            raise ConfigError(f"{what}: cannot parse {s!r}") from None
    return out


@dataclass
class RunConfig:
    """Validated run settings; every field has a working default."""

    map_name: str = "doubling"
    map_params: dict = field(default_factory=dict)
    sigma: float = 0.5
    delta: float | None = None
    epsilon: float = 0.1
    hyp_points: tuple[float, ...] = (0.3,)
    hyp_nmax: int = 20
    balls: tuple[tuple[float, float], ...] = ((1 / 3, 0.04), (2 / 3, 0.04))
    nest_epsilon: float = 0.5
    nest_cutoff: int = 12
    nest_hole: tuple[int, ...] = ()
    base: tuple[float, float] | str | None = (0.0, 0.5)
    scheme_ball: int = 0
    scheme_cutoff: int = 30
    scheme_mode: str = "sanity"
    prune: bool = False
    nsym: int | None = None
    depth: int = 1
    nmax: int = 12
    tol: float = 1e-10
    potential_kind: str = "zero"
    potential_t: float = 0.0
    potential_c: float = 0.0
    grid_depth: int = 10
    exactness: int | None = None
    escape_hole: tuple[tuple[float, float], ...] = ((0.75, 1.0),)
    escape_nmax: int = 20
    tol_inv: float = TOL_INV
    tol_meas: float = TOL_MEAS
    tol_eq: float = TOL_EQ
    max_preimages: int = int(MAX_PREIMAGES)
    output_dir: str | None = None
    output_format: str = "json"

    @classmethod
    def from_pairs(cls, pairs: dict[str, str]) -> RunConfig:
        cfg = cls()
        params = {}
        for key, val in pairs.items():
            if key.startswith("map.params."):
                try:
                    params[key[len("map.params."):]] = float(val)
                except ValueError:
                    raise ConfigError(f"{key}: expected a number") from None
                continue
            if key not in _KNOWN:
                raise ConfigError(f"unknown config key {key!r}")
            cfg._set(key, val)
        cfg.map_params = params
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_pairs(parse_text(text))

    def _set(self, key: str, val: str) -> None:
        def num(cast=float):
            try:
                return cast(val)
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {val!r}") from None

        def opt_int():
            return None if val.lower() in ("", "none", "all") else num(int)

        if key == "map.name":
            self.map_name = val
        elif key == "contraction.sigma":
            self.sigma = num()
        elif key == "contraction.delta":
            self.delta = num()
        elif key == "contraction.epsilon":
            self.epsilon = num()
        elif key == "hyp.points":
            self.hyp_points = tuple(_floats(val, key))
        elif key == "hyp.nmax":
            self.hyp_nmax = num(int)
        elif key == "nest.balls":
            self.balls = tuple(_pairs(val, key))
        elif key == "nest.epsilon":
            self.nest_epsilon = num()
        elif key == "nest.cutoff":
            self.nest_cutoff = num(int)
        elif key == "nest.hole":
            self.nest_hole = tuple(int(v) for v in _floats(val, key))
        elif key == "scheme.base":
            if val.lower() in ("whole", "none", ""):
                self.base = None
            elif val.lower() == "nest":
                self.base = "nest"
            else:
                b = _floats(val, key)
                if len(b) != 2:
                    raise ConfigError("scheme.base needs two numbers 'lo, hi'")
                self.base = (b[0], b[1])
        elif key == "scheme.ball":
            self.scheme_ball = num(int)
        elif key == "scheme.cutoff":
            self.scheme_cutoff = num(int)
        elif key == "scheme.mode":
            self.scheme_mode = val
        elif key == "scheme.prune":
            self.prune = val.lower() in ("1", "true", "yes")
        elif key == "thermo.nsym":
            self.nsym = opt_int()
        elif key == "thermo.depth":
            self.depth = num(int)
        elif key == "thermo.nmax":
            self.nmax = num(int)
        elif key == "thermo.tol":
            self.tol = num()
        elif key == "potential.kind":
            self.potential_kind = val
        elif key == "potential.t":
            self.potential_t = num()
        elif key == "potential.c":
            self.potential_c = num()
        elif key == "grid.depth":
            self.grid_depth = num(int)
        elif key == "conformal.exactness":
            self.exactness = opt_int()
        elif key == "escape.hole":
            self.escape_hole = tuple(_pairs(val, key)) if val.strip() else ()
        elif key == "escape.nmax":
            self.escape_nmax = num(int)
        elif key == "tol.inv":
            self.tol_inv = num()
        elif key == "tol.meas":
            self.tol_meas = num()
        elif key == "tol.eq":
            self.tol_eq = num()
        elif key == "limits.max_preimages":
            self.max_preimages = num(int)
        elif key == "output.dir":
            self.output_dir = val or None
        elif key == "output.format":
            self.output_format = val

    def validate(self) -> None:
        if self.map_name not in BUILTIN_MAPS:
            raise ConfigError(f"unknown map {self.map_name!r}; choose from {BUILTIN_MAPS}")
        for name in ("tol", "tol_inv", "tol_meas", "tol_eq", "epsilon", "nest_epsilon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("nest_cutoff", "scheme_cutoff", "hyp_nmax", "nmax", "escape_nmax",
                     "grid_depth", "max_preimages"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 0 < self.sigma < 1:
            raise ConfigError("contraction.sigma must lie in (0, 1)")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("contraction.delta must be positive")
        if self.depth not in (1, 2):
            raise ConfigError("thermo.depth must be 1 or 2")
        if self.nsym is not None and self.nsym < 1:
            raise ConfigError("thermo.nsym must be at least 1")
        if self.scheme_mode not in ("sanity", "zooming"):
            raise ConfigError("scheme.mode must be 'sanity' or 'zooming'")
        if self.base == "nest" and self.scheme_mode != "zooming":
            raise ConfigError("scheme.base = nest needs scheme.mode = zooming")
        if self.base == "nest" and not 0 <= self.scheme_ball < len(self.balls):
            raise ConfigError("scheme.ball must index nest.balls")
        if self.potential_kind not in ("zero", "geometric", "constant"):
            raise ConfigError("potential.kind must be zero, geometric or constant")
        if self.output_format not in ("json", "csv"):
            raise ConfigError("output.format must be json or csv")
        if isinstance(self.base, tuple) and not self.base[0] < self.base[1]:
            raise ConfigError("scheme.base needs lo < hi")
        if any(r <= 0 for _, r in self.balls):
            raise ConfigError("ball radii must be positive")

    # builders

    def build_map(self) -> MapModel:
        return builtin_map(self.map_name, self.map_params or None)

    def contraction(self, fmap: MapModel) -> ZoomingContraction:
        delta = fmap.default_delta() if self.delta is None else self.delta
        return ZoomingContraction(sigma=self.sigma, delta=delta, epsilon=self.epsilon)

    def potential(self) -> PotentialSpec:
        if self.potential_kind == "geometric":
            return PotentialSpec.geometric(self.potential_t)
        if self.potential_kind == "constant":
            return PotentialSpec.constant(self.potential_c)
        return PotentialSpec()

    def base_interval(self, fmap: MapModel) -> Interval | None:
        """The configured base, ``None`` for the whole space (``nest`` is resolved by the caller)."""
        if not isinstance(self.base, tuple):
            return None
        return Interval(self.base[0], self.base[1], fmap.phase.period)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
