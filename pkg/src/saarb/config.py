"""JSON experiment configuration: loading, overrides and object construction.

Sections: ``problem``, ``risk``, ``grids``, ``bounds``, ``mc``. Overrides use
dotted keys (``mc.n=200``); ``n``, ``seed`` and ``replications`` are
shorthands for the ``mc`` entries and ``grid.*`` is accepted for ``grids.*``.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path
from typing import Callable

from . import entropy as E
from .dist import SourceDistribution
from .errors import ConfigurationError
from .goal import (
    NAMED_GOALS,
    ConstantGoal,
    EnvelopeSpec,
    ParamBox,
    PLCell,
    PLGoal,
    build_envelope_hoelder,
    build_envelope_pl,
)
from .harness import ExperimentConfig
from .risk import PhiFamily, RiskFunctional
from .saa import SAAProblem, closed_form_oracle, default_points, quadrature_oracle

SECTIONS = ("name", "problem", "risk", "grids", "bounds", "mc")
ALIASES = {"n": "mc.n", "seed": "mc.seed", "replications": "mc.replications"}

DEFAULTS = {
    "grids": {"points_per_dim": None, "refinements": 2},
    "bounds": {"t_grid": None, "delta": 1.0, "remainder": "bounded", "scale": 1.0,
               "entropy": {"kind": "hoelder"}, "j_deltas": [0.5, 0.25]},
    "mc": {"n": 100, "replications": 200, "seed": 0},
}


def load(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    return normalize(cfg)


def normalize(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a JSON object")
    cfg = copy.deepcopy(cfg)
    if "grid" in cfg:
        cfg["grids"] = {**cfg.pop("grid"), **cfg.get("grids", {})}
    unknown = set(cfg) - set(SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    for sec in ("problem", "risk"):
        if sec not in cfg:
            raise ConfigurationError(f"config is missing the {sec!r} section")
    for sec, defaults in DEFAULTS.items():
        cfg[sec] = {**defaults, **cfg.get(sec, {})}
    return cfg


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``key=value`` strings; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        key = ALIASES.get(key.strip(), key.strip())
        parts = key.split(".")
        if parts[0] == "grid":
            parts[0] = "grids"
        if parts[0] not in SECTIONS:
            raise ConfigurationError(f"unknown config section in override {key!r}")
        node = cfg
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override path {key!r} crosses a non-object value")
        node[parts[-1]] = _parse_value(raw)
    return cfg


# -- builders ---------------------------------------------------------------------

def build_box(spec: dict) -> ParamBox:
    try:
        return ParamBox(tuple(spec["lower"]), tuple(spec["upper"]))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad box spec {spec!r}: {exc}") from None


def build_goal(spec, box: ParamBox):
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind in NAMED_GOALS:
        return NAMED_GOALS[kind](box)
    if kind == "constant":
        return ConstantGoal(float(spec["value"]), box.m, int(spec.get("d", 1)))
    if kind == "pl":
        try:
            cells = [
                PLCell(c["Lambda"], c.get("b", 0.0),
                       [(k["L"], k.get("a", 0.0), k.get("closed", True)) for k in c["constraints"]])
                for c in spec["cells"]
            ]
            return PLGoal(cells, spec["T"], spec.get("name", "pl"))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad PL goal spec: {exc}") from None
    raise ConfigurationError(f"unknown goal kind {kind!r}; known: {sorted(NAMED_GOALS)} + constant, pl")


def build_risk(spec: dict) -> RiskFunctional:
    kind = spec.get("kind", "expectation")
    if kind == "expectation":
        return RiskFunctional.expectation()
    if kind == "semideviation":
        return RiskFunctional.semideviation(float(spec.get("p", 1.0)), float(spec.get("a", 1.0)))
    if kind == "divergence":
        kind = spec.get("phi", "avar")
    x0 = spec.get("x0")
    if kind == "avar":
        if "alpha" not in spec:
            raise ConfigurationError("AVaR risk needs risk.alpha")
        return RiskFunctional.divergence(PhiFamily.avar(float(spec["alpha"]), None if x0 is None else float(x0)))
    if kind == "entropic":
        return RiskFunctional.divergence(PhiFamily.entropic(1.5 if x0 is None else float(x0)))
    raise ConfigurationError(f"unknown risk kind {kind!r}")


def build_envelope(spec, goal, box: ParamBox) -> EnvelopeSpec:
    if spec is None:
        spec = "pl" if isinstance(goal, PLGoal) else "hoelder"
    if isinstance(spec, (int, float)):
        return EnvelopeSpec.const(spec)
    if isinstance(spec, dict) and "constant" in spec:
        return EnvelopeSpec.const(spec["constant"])
    if spec == "hoelder":
        if isinstance(goal, PLGoal):
            raise ConfigurationError("PL goals use the pl envelope")
        return build_envelope_hoelder(goal, box)
    if spec == "pl":
        if not isinstance(goal, PLGoal):
            raise ConfigurationError("the pl envelope needs a PL goal")
        return build_envelope_pl(goal, box)
    raise ConfigurationError(f"unknown envelope spec {spec!r}")


def build_problem(cfg: dict) -> SAAProblem:
    p = cfg["problem"]
    for key in ("goal", "box", "source"):
        if key not in p:
            raise ConfigurationError(f"problem.{key} is required")
    box = build_box(p["box"])
    goal = build_goal(p["goal"], box)
    source = SourceDistribution.from_dict(p["source"])
    risk = build_risk(cfg["risk"])
    problem = SAAProblem(goal, box, source, risk, name=cfg.get("name", "problem"))
    oracle = p.get("oracle", "auto")
    if oracle in ("auto", "closed-form"):
        problem.true_optimum = closed_form_oracle(problem)
        if problem.true_optimum is None and oracle == "auto" and source.d == 1:
            problem.true_optimum = quadrature_oracle(problem)
    elif oracle == "quadrature":
        problem.true_optimum = quadrature_oracle(problem)
    elif oracle != "none":
        raise ConfigurationError(f"unknown oracle {oracle!r}")
    return problem


def build_entropy(spec, goal) -> Callable[[float], float]:
    """Map ``delta -> J(delta)`` for the goal class."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "hoelder")
    if kind == "hoelder":
        if isinstance(goal, PLGoal):
            raise ConfigurationError("PL goals use the pl entropy bound")
        m = int(spec.get("m", getattr(goal, "m", 1)))
        beta = float(spec.get("beta", getattr(goal, "beta", 1.0)))
        return lambda d: E.j_hoelder(m, beta, d).value
    if kind == "pl":
        if not isinstance(goal, PLGoal):
            raise ConfigurationError("the pl entropy bound needs a PL goal")
        return lambda d: E.j_pl(goal.r, goal.s, d).value
    if kind == "vc":
        V = int(spec["V"])
        return lambda d: E.j_vc(V, d).value
    if kind == "table":
        table = {float(k): float(v) for k, v in spec["values"].items()}

        def lookup(d):
            for k, v in table.items():
                if math.isclose(k, d, rel_tol=1e-12):
                    return v
            raise ConfigurationError(f"entropy table has no entry at delta={d}")

        return lookup
    raise ConfigurationError(f"unknown entropy kind {kind!r}")


def _t_grid(cfg):
    from .bounds import DEFAULT_T_GRID

    grid = cfg["bounds"].get("t_grid")
    if grid is None:
        return DEFAULT_T_GRID
    if not grid or any(not float(t) > 0 for t in grid):
        raise ConfigurationError("bounds.t_grid must be a nonempty list of positive values")
    return tuple(float(t) for t in grid)


def n_list(cfg) -> list:
    mc = cfg["mc"]
    ns = mc.get("n_list") or cfg["bounds"].get("n_list") or [mc["n"]]
    try:
        ns = [int(n) for n in ns]
    except (TypeError, ValueError):
        raise ConfigurationError(f"bad n list {ns!r}") from None
    if any(n < 1 for n in ns):
        raise ConfigurationError("sample sizes must be >= 1")
    return ns


def _positive_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value) or value < 1:
        raise ConfigurationError(f"{key} must be a positive integer, got {value!r}")
    return int(value)


def check_mc(cfg: dict) -> None:
    mc = cfg["mc"]
    _positive_int(mc["n"], "mc.n")
    _positive_int(mc["replications"], "mc.replications")
    if not isinstance(mc["seed"], int) or isinstance(mc["seed"], bool) or mc["seed"] < 0:
        raise ConfigurationError(f"mc.seed must be a nonnegative integer, got {mc['seed']!r}")
    n_list(cfg)


def sample_size(cfg: dict) -> int:
    return _positive_int(cfg["mc"]["n"], "mc.n")


def build_experiment(cfg: dict) -> ExperimentConfig:
    check_mc(cfg)
    problem = build_problem(cfg)
    envelope = build_envelope(cfg["problem"].get("envelope"), problem.goal, problem.box)
    J = build_entropy(cfg["bounds"]["entropy"], problem.goal)
    mc, bd, gr = cfg["mc"], cfg["bounds"], cfg["grids"]
    eps = mc.get("eps_list") or bd.get("eps_list")
    if not eps:
        raise ConfigurationError("an eps list is required (mc.eps_list or bounds.eps_list)")
    points = gr.get("points_per_dim")
    return ExperimentConfig(
        problem=problem,
        n_list=n_list(cfg),
        replications=int(mc["replications"]),
        eps_list=eps,
        envelope=envelope,
        J=J,
        seed=int(mc["seed"]),
        t_grid=_t_grid(cfg),
        delta=float(bd["delta"]),
        remainder=bd["remainder"],
        points=default_points(problem.box.m) if points is None else int(points),
        refinements=int(gr["refinements"]),
        scale=float(bd["scale"]),
    )


