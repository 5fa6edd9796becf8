"""
Hyperparameter search spaces.

A space is an ordered list of parameters. Each parameter is continuous,
integer or categorical; numeric parameters may be log-scaled and may take a
bound from a previously declared parameter (e.g. ``k1 <= k2``). A parameter
can be made conditional on the value of a categorical parameter.

Spaces are read from JSON documents of the form::

    {"params": [
        {"name": "learning_rate", "kind": "continuous", "scale": "log",
         "min": 1e-3, "max": 1e-1},
        {"name": "k1", "kind": "integer", "min": 5, "max_ref": "k2"},
        {"name": "degree", "kind": "integer", "min": 2, "max": 5,
         "active_when": {"param": "kernel", "equals": "poly"}}
    ]}

Sampling is uniform over the declared ranges (log-uniform for log scales)
and draws configurations one after another from a single generator, so the
first ``k`` configurations of ``sample(space, seed, n)`` do not depend on
``n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Literal

import numpy as np

from hyperband._util import as_generator

Configuration = dict[str, Any]

KINDS = ("continuous", "integer", "categorical")
SCALES = ("linear", "log")

_ALLOWED_KEYS = {
    "name", "kind", "scale", "min", "max", "choices", "min_ref", "max_ref",
    "active_when",
}


class SpaceError(ValueError):
    """Raised for malformed or inconsistent search-space declarations."""

    def __init__(self, message: str, param: str | None = None, location: str | None = None):
        self.param = param
        self.location = location
        where = ", ".join(x for x in (location, f"param {param!r}" if param else None) if x)
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class Condition:
    """Activation predicate ``param == label`` (or ``param in labels``)."""

    param: str
    equals: tuple[str, ...]

    def holds(self, config: Configuration) -> bool:
        return self.param in config and config[self.param] in self.equals


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: Literal["continuous", "integer", "categorical"]
    scale: Literal["linear", "log"] = "linear"
    lower: float | None = None
    upper: float | None = None
    lower_ref: str | None = None
    upper_ref: str | None = None
    choices: tuple[Any, ...] = ()
    active_when: Condition | None = None

    @property
    def is_numeric(self) -> bool:
        return self.kind != "categorical"

    def is_active(self, config: Configuration) -> bool:
        return self.active_when is None or self.active_when.holds(config)

    def bounds(self, config: Configuration) -> tuple[float, float]:
        """Lower and upper bound, resolving references against ``config``."""
        lo = config[self.lower_ref] if self.lower_ref else self.lower
        hi = config[self.upper_ref] if self.upper_ref else self.upper
        return lo, hi

    def draw(self, rng: np.random.Generator, config: Configuration) -> Any:
        if self.kind == "categorical":
            return self.choices[int(rng.integers(len(self.choices)))]
        lo, hi = self.bounds(config)
        if self.kind == "continuous":
            if self.scale == "log":
                return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
            return float(rng.uniform(lo, hi))
        lo_i, hi_i = int(lo), int(hi)
        if self.scale == "log":
            x = math.exp(rng.uniform(math.log(lo_i), math.log(hi_i)))
            # round half up, then guard the float edge cases
            return min(max(int(math.floor(x + 0.5)), lo_i), hi_i)
        return int(rng.integers(lo_i, hi_i + 1))


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[ParamSpec, ...]
    _index: dict[str, ParamSpec] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        _check_space(self.params)
        object.__setattr__(self, "_index", {p.name: p for p in self.params})

    def __len__(self) -> int:
        return len(self.params)

    def __getitem__(self, name: str) -> ParamSpec:
        return self._index[name]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def sample(self, rng: np.random.Generator | int | None, n: int) -> list[Configuration]:
        return sample(self, rng, n)

    def validate(self, config: Configuration) -> list[str]:
        return validate(self, config)

    def to_dict(self) -> dict:
        return {"params": [_param_to_dict(p) for p in self.params]}


def _check_space(params: tuple[ParamSpec, ...]) -> None:
    if not params:
        raise SpaceError("empty space")
    seen: dict[str, ParamSpec] = {}
    for i, p in enumerate(params):
        loc = f"params[{i}]"
        if not p.name or not isinstance(p.name, str):
            raise SpaceError("parameter name must be a non-empty string", None, loc)
        if p.name in seen:
            raise SpaceError("duplicate name", p.name, loc)
        if p.kind not in KINDS:
            raise SpaceError(f"unknown kind {p.kind!r}", p.name, loc)
        if p.active_when is not None:
            cond = seen.get(p.active_when.param)
            if cond is None:
                raise SpaceError(
                    f"active_when refers to {p.active_when.param!r}, which is not declared "
                    "earlier (cyclic or unknown reference)", p.name, loc)
            if cond.kind != "categorical":
                raise SpaceError("active_when must refer to a categorical parameter", p.name, loc)
            bad = [v for v in p.active_when.equals if v not in cond.choices]
            if bad:
                raise SpaceError(f"active_when label(s) {bad} not among the choices of "
                                 f"{cond.name!r}", p.name, loc)
        if p.kind == "categorical":
            _check_categorical(p, loc)
        else:
            _check_numeric(p, seen, loc)
        seen[p.name] = p


def _check_categorical(p: ParamSpec, loc: str) -> None:
    if not p.choices:
        raise SpaceError("categorical parameter needs non-empty choices", p.name, loc)
    if len(set(p.choices)) != len(p.choices):
        raise SpaceError("categorical choices must be unique", p.name, loc)
    if p.lower is not None or p.upper is not None or p.lower_ref or p.upper_ref:
        raise SpaceError("categorical parameter takes no bounds", p.name, loc)


def _check_numeric(p: ParamSpec, seen: dict[str, ParamSpec], loc: str) -> None:
    if p.scale not in SCALES:
        raise SpaceError(f"unknown scale {p.scale!r}", p.name, loc)
    if p.choices:
        raise SpaceError("numeric parameter takes no choices", p.name, loc)
    for side, lit, ref in (("min", p.lower, p.lower_ref), ("max", p.upper, p.upper_ref)):
        if (lit is None) == (ref is None):
            raise SpaceError(f"exactly one of {side!r} / {side + '_ref'!r} is required",
                             p.name, loc)
        if ref is not None:
            target = seen.get(ref)
            if target is None:
                raise SpaceError(f"{side}_ref {ref!r} is not declared earlier "
                                 "(cyclic or unknown reference)", p.name, loc)
            if target.kind != p.kind:
                raise SpaceError(f"{side}_ref {ref!r} has kind {target.kind}, expected {p.kind}",
                                 p.name, loc)
            if target.active_when != p.active_when:
                raise SpaceError(f"{side}_ref {ref!r} is not active under the same condition",
                                 p.name, loc)
        elif not (isinstance(lit, (int, float)) and math.isfinite(lit)):
            raise SpaceError(f"{side} must be a finite number", p.name, loc)
        elif p.kind == "integer" and float(lit) != int(lit):
            raise SpaceError(f"{side} must be an integer", p.name, loc)

    # worst-case range: smallest attainable upper vs largest attainable lower
    lo = seen[p.lower_ref].upper if p.lower_ref else p.lower
    hi = seen[p.upper_ref].lower if p.upper_ref else p.upper
    if lo is None or hi is None:
        raise SpaceError("chained bound references are not supported", p.name, loc)
    if p.lower_ref is None and p.upper_ref is None:
        if not lo < hi:
            raise SpaceError(f"bad bounds: min {lo} must be < max {hi}", p.name, loc)
    elif lo > hi:
        raise SpaceError(f"bad bounds: referenced range allows min {lo} > max {hi}", p.name, loc)
    if p.scale == "log":
        low_end = seen[p.lower_ref].lower if p.lower_ref else p.lower
        if low_end is None or low_end <= 0:
            raise SpaceError("log scale requires min > 0", p.name, loc)


def _param_to_dict(p: ParamSpec) -> dict:
    d: dict[str, Any] = {"name": p.name, "kind": p.kind}
    if p.kind == "categorical":
        d["choices"] = list(p.choices)
    else:
        d["scale"] = p.scale
        d["min_ref" if p.lower_ref else "min"] = p.lower_ref or p.lower
        d["max_ref" if p.upper_ref else "max"] = p.upper_ref or p.upper
    if p.active_when is not None:
        eq = p.active_when.equals
        d["active_when"] = {"param": p.active_when.param,
                            "equals": eq[0] if len(eq) == 1 else list(eq)}
    return d


def _param_from_dict(raw: Any, i: int) -> ParamSpec:
    loc = f"params[{i}]"
    if not isinstance(raw, dict):
        raise SpaceError("each parameter must be an object", None, loc)
    name = raw.get("name")
    unknown = set(raw) - _ALLOWED_KEYS
    if unknown:
        raise SpaceError(f"unknown keys {sorted(unknown)}", name, loc)
    if "kind" not in raw:
        raise SpaceError("missing 'kind'", name, loc)
    cond = None
    if raw.get("active_when") is not None:
        aw = raw["active_when"]
        if not isinstance(aw, dict) or "param" not in aw or "equals" not in aw:
            raise SpaceError("active_when needs 'param' and 'equals'", name, loc)
        eq = aw["equals"]
        cond = Condition(aw["param"], tuple(eq) if isinstance(eq, list) else (eq,))
    return ParamSpec(
        name=name,
        kind=raw["kind"],
        scale=raw.get("scale", "linear"),
        lower=raw.get("min"),
        upper=raw.get("max"),
        lower_ref=raw.get("min_ref"),
        upper_ref=raw.get("max_ref"),
        choices=tuple(raw.get("choices") or ()),
        active_when=cond,
    )


def parse_space(document: str | dict) -> SearchSpace:
    """Parse and validate a search-space JSON document (text or decoded dict)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SpaceError(f"malformed JSON: {exc}", None, f"line {exc.lineno}") from exc
    if not isinstance(document, dict) or "params" not in document:
        raise SpaceError("document must be an object with a 'params' list")
    raw_params = document["params"]
    if not isinstance(raw_params, list):
        raise SpaceError("'params' must be a list")
    if not raw_params:
        raise SpaceError("empty space")
    return SearchSpace(tuple(_param_from_dict(r, i) for i, r in enumerate(raw_params)))


def load_space(path: str | Path) -> SearchSpace:
    return parse_space(Path(path).read_text())


def builtin_space(name: str) -> SearchSpace:
    """One of the bundled spaces: ``lenet``, ``cuda_convnet``, ``kernel_lsqr``,
    ``random_features``."""
    text = resources.files("hyperband").joinpath("spaces", f"{name}.json").read_text()
    return parse_space(text)


def sample(space: SearchSpace, rng: np.random.Generator | int | None, n: int) -> list[Configuration]:
    """Draw ``n`` i.i.d. configurations uniformly from ``space``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = as_generator(rng)
    out = []
    for _ in range(n):
        config: Configuration = {}
        for p in space.params:
            if p.is_active(config):
                config[p.name] = p.draw(rng, config)
        out.append(config)
    return out


def validate(space: SearchSpace, config: Configuration) -> list[str]:
    """Return the list of violations of ``config`` against ``space`` (empty if valid)."""
    problems = []
    for key in config:
        if key not in space._index:
            problems.append(f"{key}: unknown parameter")
    for p in space.params:
        active = p.is_active(config)
        if not active:
            if p.name in config:
                problems.append(f"{p.name}: inactive parameter present")
            continue
        if p.name not in config:
            problems.append(f"{p.name}: missing active parameter")
            continue
        v = config[p.name]
        if p.kind == "categorical":
            if v not in p.choices:
                problems.append(f"{p.name}: {v!r} is not a valid choice")
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float, np.integer, np.floating)):
            problems.append(f"{p.name}: not a number")
            continue
        if p.kind == "integer" and float(v) != int(v):
            problems.append(f"{p.name}: not an integer")
        try:
            lo, hi = p.bounds(config)
        except KeyError as exc:
            problems.append(f"{p.name}: bound reference {exc.args[0]!r} missing")
            continue
        if not lo <= v <= hi:
            problems.append(f"{p.name}: {v} out of bounds [{lo}, {hi}]")
    return problems
