import json
import math

import numpy as np
import pytest

from saarb import config as C
from saarb.errors import ConfigurationError, DomainError
from saarb.goal import PLGoal
from saarb.risk import PhiFamily

BASE = {
    "problem": {"goal": "quadratic", "box": {"lower": [0.0], "upper": [1.0]},
                "source": {"kind": "uniform", "lo": 0.0, "hi": 1.0}},
    "risk": {"kind": "expectation"},
    "mc": {"eps_list": [0.1]},
}


def cfg(**sections):
    return C.normalize({**BASE, **sections})


class TestLoad:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            C.load(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{oops")
        with pytest.raises(ConfigurationError):
            C.load(p)

    @pytest.mark.parametrize("name", ["bilinear_expectation", "bilinear_semideviation", "bilinear_avar",
                                      "quadratic_expectation", "quadratic_semideviation", "quadratic_avar",
                                      "quadratic_entropic"])
    def test_bundled_configs_build(self, bundled, name):
        exp = C.build_experiment(C.load(bundled(name)))
        assert exp.problem.true_optimum is not None and exp.replications >= 500

    def test_defaults_and_grid_alias(self):
        c = C.normalize({**BASE, "grid": {"points_per_dim": 17}})
        assert c["grids"]["points_per_dim"] == 17 and c["grids"]["refinements"] == 2
        assert c["mc"]["seed"] == 0 and c["bounds"]["delta"] == 1.0

    @pytest.mark.parametrize("bad", [[], {"problem": {}}, {**BASE, "extra": {}}])
    def test_normalize_rejects(self, bad):
        with pytest.raises(ConfigurationError):
            C.normalize(bad)


class TestOverrides:
    def test_aliases_and_json_values(self):
        c = C.apply_overrides(cfg(), ["n=250", "seed=9", "grid.points_per_dim=33", "risk.kind=avar", "name=x y"])
        assert c["mc"]["n"] == 250 and c["mc"]["seed"] == 9
        assert c["grids"]["points_per_dim"] == 33 and c["risk"]["kind"] == "avar" and c["name"] == "x y"

    def test_nested_creation(self):
        c = C.apply_overrides(cfg(), ["bounds.entropy.kind=pl"])
        assert c["bounds"]["entropy"] == {"kind": "pl"}

    @pytest.mark.parametrize("item", ["nokey", "bogus.x=1", "mc.n.deep=1"])
    def test_rejects(self, item):
        with pytest.raises(ConfigurationError):
            C.apply_overrides(cfg(), [item])

    def test_original_untouched(self):
        c = cfg()
        C.apply_overrides(c, ["n=5"])
        assert c["mc"]["n"] == 100

    @pytest.mark.parametrize("item", ["n=0", "n=1.5", "replications=-1", "seed=-3", "seed=\"a\"", "mc.n_list=[0]"])
    def test_check_mc(self, item):
        with pytest.raises(ConfigurationError):
            C.check_mc(C.apply_overrides(cfg(), [item]))


class TestBuilders:
    @pytest.mark.parametrize("spec, label", [
        ({"kind": "expectation"}, "expectation"),
        ({"kind": "semideviation", "p": 2, "a": 0.5}, "semideviation"),
        ({"kind": "avar", "alpha": 0.25}, "avar"),
        ({"kind": "divergence", "phi": "entropic"}, "entropic"),
    ])
    def test_risk(self, spec, label):
        assert label in C.build_risk(spec).label

    def test_risk_errors(self):
        with pytest.raises(ConfigurationError):
            C.build_risk({"kind": "avar"})
        with pytest.raises(ConfigurationError):
            C.build_risk({"kind": "mystery"})
        with pytest.raises(DomainError):
            C.build_risk({"kind": "avar", "alpha": 1.0})

    def test_avar_x0(self):
        assert C.build_risk({"kind": "avar", "alpha": 0.5, "x0": 1.5}).phi.x0 == 1.5
        assert C.build_risk({"kind": "avar", "alpha": 0.5}).phi.x0 == PhiFamily.avar(0.5).x0

    def test_pl_goal(self):
        spec = {"kind": "pl", "T": [[-1.0]],
                "cells": [{"Lambda": [-1.0], "b": 0.0, "constraints": [{"L": [-1.0]}]},
                          {"Lambda": [1.0], "constraints": [{"L": [1.0], "closed": False}]}]}
        box = C.build_box({"lower": [0.0], "upper": [1.0]})
        goal = C.build_goal(spec, box)
        assert isinstance(goal, PLGoal)
        env = C.build_envelope(None, goal, box)
        assert env(np.array([[0.5]]))[0] > 0
        J = C.build_entropy("pl", goal)
        assert J(1.0) > 0
        with pytest.raises(ConfigurationError):
            C.build_entropy("hoelder", goal)
        with pytest.raises(ConfigurationError):
            C.build_envelope("hoelder", goal, box)

    @pytest.mark.parametrize("spec", [{"kind": "nope"}, {"kind": "pl", "cells": [{}]}])
    def test_goal_errors(self, spec):
        with pytest.raises(ConfigurationError):
            C.build_goal(spec, C.build_box({"lower": [0.0], "upper": [1.0]}))

    def test_box_error(self):
        with pytest.raises(ConfigurationError):
            C.build_box({"lower": [0.0]})

    def test_envelopes(self):
        box = C.build_box({"lower": [0.0], "upper": [1.0]})
        goal = C.build_goal("quadratic", box)
        assert C.build_envelope(2, goal, box).constant == 2.0
        assert C.build_envelope({"constant": 3}, goal, box).constant == 3.0
        with pytest.raises(ConfigurationError):
            C.build_envelope("pl", goal, box)
        with pytest.raises(ConfigurationError):
            C.build_envelope("other", goal, box)

    def test_entropy_kinds(self):
        goal = C.build_goal("quadratic", C.build_box({"lower": [0.0], "upper": [1.0]}))
        assert C.build_entropy({"kind": "hoelder"}, goal)(0.5) == pytest.approx(2.0393339803376179)
        assert C.build_entropy({"kind": "vc", "V": 2}, goal)(0.5) > 0
        table = C.build_entropy({"kind": "table", "values": {"0.25": 1.5}}, goal)
        assert table(0.25) == 1.5
        with pytest.raises(ConfigurationError):
            table(0.5)
        with pytest.raises(ConfigurationError):
            C.build_entropy({"kind": "x"}, goal)
        with pytest.raises(DomainError):
            C.build_entropy("hoelder", goal)(0.75)

    @pytest.mark.parametrize("oracle", ["auto", "closed-form", "quadrature"])
    def test_oracles(self, oracle):
        c = C.apply_overrides(cfg(), [f"problem.oracle={oracle}", "grids.points_per_dim=65"])
        assert C.build_problem(c).true_optimum() == pytest.approx(1 / 12, abs=1e-6)

    def test_oracle_none_and_unknown(self):
        assert C.build_problem(C.apply_overrides(cfg(), ["problem.oracle=none"])).true_optimum is None
        with pytest.raises(ConfigurationError):
            C.build_problem(C.apply_overrides(cfg(), ["problem.oracle=magic"]))

    def test_problem_requires_fields(self):
        with pytest.raises(ConfigurationError):
            C.build_problem(C.normalize({"problem": {"goal": "quadratic"}, "risk": {}}))

    def test_experiment(self):
        c = C.apply_overrides(cfg(), ["mc.n_list=[10,20,40]", "bounds.t_grid=[1,2]", "bounds.remainder=\"chebyshev\""])
        exp = C.build_experiment(c)
        assert exp.n_list == [10, 20, 40] and exp.t_grid == (1.0, 2.0) and exp.points == 1025
        assert exp.eps_list == [0.1] and math.isclose(exp.J(0.25), 1.1013662270016746)

    @pytest.mark.parametrize("item", ["bounds.t_grid=[]", "bounds.t_grid=[0]", "mc.eps_list=[]"])
    def test_experiment_errors(self, item):
        with pytest.raises(ConfigurationError):
            C.build_experiment(C.apply_overrides(cfg(), [item]))

    def test_roundtrip_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(BASE))
        assert C.load(p)["problem"]["goal"] == "quadratic"
