import json
import random
from fractions import Fraction

import pytest

from fuzz import random_atoms, random_formula
from oracles import brute_force_equivalent, enumerate_sat
from speclint.debugger import STAGES, check_redundancy, check_validity, check_vacuity, lint
from speclint.logic import FALSE, TRUE, FormulaError, And, antecedent_failure_mutation, parse, replace_at, subformula
from speclint.monitor import eval_bool
from speclint.satcheck import DiscretizationConfig, default_config

TAUT = parse("F[0,30]((v > 100) -> G[0,20](v > 100))")
REQ_ACK = parse("G[0,5](req -> F[0,10] ack)")


def cfg(h, delta=1):
    return DiscretizationConfig(Fraction(delta), Fraction(h))


class TestValidity:
    def test_tautology(self):
        issues = check_validity(TAUT, cfg(50))
        assert [i.kind for i in issues] == ["tautology"]
        assert issues[0].path is None

    def test_unsatisfiable(self):
        assert [i.kind for i in check_validity(FALSE, cfg(0))] == ["unsatisfiable"]
        assert [i.kind for i in check_validity(parse("G[0,2] p and F[1,2] not p"), cfg(2))] == ["unsatisfiable"]

    def test_clean(self):
        assert check_validity(REQ_ACK, cfg(15)) == []

    def test_fragment(self):
        with pytest.raises(FormulaError):
            check_validity(parse("p U[0,1] q"), cfg(1))


class TestRedundancy:
    def test_superset_interval(self):
        f = parse("(G[0,10] p) and (F[0,5] p)")
        issues = check_redundancy(f, cfg(10))
        assert [(i.kind, i.path) for i in issues] == [("redundant_conjunct", (1,))]

    def test_duplicate(self):
        issues = check_redundancy(parse("p and p"), cfg(0))
        assert [i.path for i in issues] == [(1,)]

    def test_independent(self):
        f = parse("(G[0,5] p) and (G[0,5] q)")
        assert check_redundancy(f, cfg(5)) == []
        for path in ((0,), (1,)):
            assert not brute_force_equivalent(f, replace_at(f, path, TRUE))

    def test_independent_over_twelve_steps(self):
        f = parse("(G[0,5] p) and (G[0,5] q)")
        assert check_redundancy(f, cfg(11)) == []

    def test_nested(self):
        f = parse("G[0,2]((x > 2) and (x > 1))")
        assert [i.path for i in check_redundancy(f, cfg(2))] == [(0, 1)]

    def test_ancestor_suppresses_descendants(self):
        f = parse("p and (p and p)")
        paths = [i.path for i in check_redundancy(f, cfg(0))]
        assert (1,) in paths
        assert not any(p[:1] == (1,) and len(p) > 1 for p in paths)

    def test_removing_all_flagged_keeps_equivalence(self):
        rng = random.Random(11)
        checked = 0
        for _ in range(300):
            vocab = random_atoms(rng)
            f = random_formula(rng, vocab, depth=3, max_end=2)
            if not isinstance(f, And):
                continue
            flagged = [i.path for i in check_redundancy(f, default_config(f, delta=1))]
            g = f
            for p in flagged:
                g = replace_at(g, p, TRUE)
            assert brute_force_equivalent(f, g)
            checked += 1
        assert checked > 20


class TestVacuity:
    def test_request_ack(self):
        issues = check_vacuity(REQ_ACK, cfg(15))
        assert len(issues) == 1
        issue = issues[0]
        assert issue.kind == "vacuous_antecedent" and issue.path == (0,)
        assert set(issue.witness.values("req")) == {0.0}
        assert eval_bool(REQ_ACK, issue.witness)

    def test_true_antecedent(self):
        assert check_vacuity(parse("G[0,5](true -> p)"), cfg(5)) == []

    def test_contradicted_by_other_conjunct(self):
        f = parse("(p -> q) and G[0,3] p")
        assert check_vacuity(f, cfg(3)) == []
        assert not enumerate_sat(And((f, antecedent_failure_mutation(f, (0,)))))

    def test_witness_satisfies_formula_and_mutation(self):
        rng = random.Random(5)
        seen = 0
        for _ in range(300):
            f = random_formula(rng, random_atoms(rng), depth=3, max_end=2)
            c = default_config(f, delta=1)
            for issue in check_vacuity(f, c):
                seen += 1
                assert eval_bool(f, issue.witness)
                assert eval_bool(antecedent_failure_mutation(f, issue.path), issue.witness)
        assert seen > 10


class TestLint:
    def test_tautology(self):
        r = lint(TAUT, delta=1, horizon=50)
        assert [i.kind for i in r.issues] == ["tautology"]
        assert r.stages_run == ("validity",)
        assert (r.delta, r.horizon) == (1, 50)

    def test_default_discretization(self):
        r = lint(TAUT)
        assert (r.delta, r.horizon) == (10, 50)
        assert [i.kind for i in r.issues] == ["tautology"]

    def test_request_ack(self):
        r = lint(REQ_ACK)
        assert r.stages_run == STAGES
        assert [(i.kind, i.path) for i in r.issues] == [("vacuous_antecedent", (0,))]

    def test_clean(self):
        r = lint(parse("p"))
        assert r.ok and r.issues == () and r.stages_run == STAGES

    def test_fragment_error_is_reported(self):
        r = lint(parse("p U[0,1] q"))
        assert r.error and "until" in r.error.lower()
        assert r.issues == () and r.stages_run == ()

    def test_bad_delta_is_reported(self):
        r = lint(REQ_ACK, delta=Fraction(3, 2))
        assert r.error and not r.ok

    def test_json_shape(self):
        doc = lint(REQ_ACK).to_json()
        assert list(doc) == ["formula", "delta", "horizon", "issues", "stages_run"]
        assert doc["delta"] == "5" and doc["horizon"] == "15"
        issue = doc["issues"][0]
        assert issue["path"] == [0] and issue["witness_csv"].startswith("time,ack,req\n")

    def test_idempotent(self):
        assert lint(REQ_ACK).dumps() == lint(REQ_ACK).dumps()

    def test_text_render(self):
        text = lint(REQ_ACK).render_text()
        assert "vacuous_antecedent at [0]" in text

    @pytest.mark.parametrize("seed", range(40))
    def test_stage_gating(self, seed):
        rng = random.Random(seed)
        f = random_formula(rng, random_atoms(rng), depth=3, max_end=2)
        r = lint(f, delta=1)
        kinds = {i.kind for i in r.issues}
        if kinds & {"unsatisfiable", "tautology"}:
            assert len(r.issues) == 1 and r.stages_run == ("validity",)
        else:
            assert r.stages_run == STAGES
        for i in r.issues:
            if i.kind == "redundant_conjunct":
                assert isinstance(subformula(f, i.path[:-1]), And)
        json.dumps(r.to_json())
