"""Serialization round trips and structural error paths."""
import json

import pytest

from martcheck import (
    ConfigError,
    csv_row,
    eval_discrete,
    exact_report,
    integrand_to_obj,
    lp_norm,
    parse_integrand,
    parse_search,
    parse_tree,
    report_row,
    search,
    search_result_to_obj,
    search_to_obj,
    tree_to_obj,
)
from martcheck.formats import CSV_FIELDS, REPORT_FIELDS


def load(zoo, name):
    with open(zoo / f"{name}.json") as fh:
        return json.load(fh)


class TestTreeFormat:
    def test_round_trip_zoo(self, zoo):
        for name in ("tree_coin", "tree_walk2", "tree_r2"):
            tree = parse_tree(load(zoo, name))
            assert tree.validate().ok
            obj = tree_to_obj(tree)
            again = parse_tree(obj)
            assert tree_to_obj(again) == obj
            assert lp_norm(again, again.depth, 3) == lp_norm(tree, tree.depth, 3)

    def test_shallow_leaf_padding(self, zoo):
        tree = parse_tree(load(zoo, "tree_pad"))
        assert tree.validate().ok

        def depths(node, d=0):
            if node.is_leaf:
                yield d
            for br in node.children:
                yield from depths(br.node, d + 1)

        assert set(depths(tree.root)) == {tree.depth}
        # the padded branch holds its value 0 at level 2 while the deep
        # branch splits 1+1 into {3, 1}: E X_2^2 = (9 + 1)/4 + 0 = 2.5
        assert lp_norm(tree, 2, 2) ** 2 == pytest.approx(2.5, abs=1e-12)

    def test_scalar_increment_promotes(self):
        tree = parse_tree({"m0": 0.0, "tree": {"children": [
            {"prob": 0.5, "incr": 1.0, "node": {}},
            {"prob": 0.5, "incr": -1.0, "node": {}}]}})
        assert tree.dim == 1
        assert tree.validate().ok

    @pytest.mark.parametrize("doc", [
        "not a dict",
        {"tree": {}},                                   # m0 missing
        {"m0": [0.0]},                                  # tree missing
        {"m0": [], "tree": {}},                         # empty vector
        {"m0": [True], "tree": {}},                     # bool is not a number
        {"m0": [0.0], "tree": {"children": "zero"}},
        {"m0": [0.0], "tree": {"children": [{"prob": 1.0, "node": {}}]}},
        {"m0": [0.0], "tree": {"children": [
            {"prob": "half", "incr": [0.0], "node": {}}]}},
    ])
    def test_malformed_documents(self, doc):
        with pytest.raises(ConfigError):
            parse_tree(doc)


class TestIntegrandFormat:
    def test_round_trip_zoo(self, zoo):
        for name in ("spec_const1", "spec_lin", "spec_sign", "spec_mixed2d"):
            spec = parse_integrand(load(zoo, name))
            obj = integrand_to_obj(spec)
            assert parse_integrand(obj) == spec

    def test_scalar_c_broadcasts(self):
        spec = parse_integrand({
            "dim": 3, "wiener_dim": 1, "horizon": 1.0, "steps": 4,
            "rules": [{"range": [0, 4], "j": 1, "kind": "const", "c": 2.0}]})
        assert spec.entries[0].rule.c == (2.0, 2.0, 2.0)

    def test_k_survives_round_trip(self):
        obj = {"dim": 1, "wiener_dim": 2, "horizon": 1.0, "steps": 8,
               "rules": [{"range": [0, 8], "j": 2, "kind": "sign",
                          "c": [1.5], "k": 2}]}
        assert integrand_to_obj(parse_integrand(obj)) == obj

    @pytest.mark.parametrize("doc", [
        {"wiener_dim": 1, "horizon": 1.0, "steps": 4, "rules": []},
        {"dim": 1.5, "wiener_dim": 1, "horizon": 1.0, "steps": 4, "rules": []},
        {"dim": 1, "wiener_dim": 1, "horizon": 1.0, "steps": 4, "rules": 7},
        {"dim": 1, "wiener_dim": 1, "horizon": 1.0, "steps": 4,
         "rules": [{"range": [0, 2.5], "j": 1, "kind": "const", "c": 1.0}]},
        {"dim": 1, "wiener_dim": 1, "horizon": 1.0, "steps": 4,
         "rules": [{"j": 1, "kind": "const", "c": 1.0}]},
    ])
    def test_malformed_documents(self, doc):
        with pytest.raises(ConfigError):
            parse_integrand(doc)


class TestSearchFormat:
    def test_round_trip_zoo(self, zoo):
        for name in ("search_rio_grid", "search_tree_random"):
            config = parse_search(load(zoo, name))
            obj = search_to_obj(config)
            assert parse_search(obj) == config

    def test_target_defaults(self):
        config = parse_search({"family": "RIO-TWO-POINT", "p": 4.0,
                               "method": "grid", "budget": 9, "seed": 0,
                               "a": [1.0, 1.0], "b": [0.1, 1.0]})
        assert config.target == "RIO-STEP"

    def test_result_serialization(self, zoo):
        config = parse_search(load(zoo, "search_rio_grid"))
        config = type(config)(family=config.family, method=config.method,
                              budget=16, seed=config.seed, target=config.target)
        obj = search_result_to_obj(search(config))
        assert set(obj) == {"best_ratio", "best_params", "evaluations",
                            "bound", "exceeded", "trace"}
        assert obj["evaluations"] == 16
        assert not obj["exceeded"]
        assert obj["trace"][-1]["ratio"] == obj["best_ratio"]
        json.dumps(obj)   # plain types only

    def test_branching_must_be_list(self):
        with pytest.raises(ConfigError):
            parse_search({"family": "RANDOM-TREE", "p": 4.0, "method": "random",
                          "budget": 4, "seed": 0, "branching": 3})


class TestReportRows:
    def setup_method(self):
        self.report = exact_report("D-BURK-1", 2.0, 1, 1.0, 2.0, 1.0)

    def test_report_row_fields(self):
        row = report_row(self.report)
        assert tuple(row) == REPORT_FIELDS
        assert row["id"] == "D-BURK-1"

    def test_csv_row_fields(self):
        row = csv_row(self.report)
        assert set(row) == set(CSV_FIELDS)
        assert row["inequality"] == "D-BURK-1"
        assert "notes" not in row and "verdict" not in row

    def test_rows_from_eval(self, zoo):
        tree = parse_tree(load(zoo, "tree_coin"))
        report = eval_discrete(tree, 1, 2.0, "D-BURK-1")
        assert csv_row(report)["satisfied"] is True
