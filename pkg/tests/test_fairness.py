import json
from fractions import Fraction as F

import pytest

from fairdiv.fairness import (
    full_report,
    is_EF,
    is_EF1_indivisible,
    is_EF1M,
    is_EFM,
    is_EFX_indivisible,
    is_EFXM,
    is_PO_binary,
    is_utilitarian_optimal,
    is_weak_EFM,
    utilitarian_optimum,
    welfare,
)
from fairdiv.measure import perfect_partition
from fairdiv.model import Piece, make_allocation, make_instance


def verdict(r):
    return r.verdict.value


class TestExample1:
    def test_not_ef(self, ex1, ex1_alloc):
        r = is_EF(ex1, ex1_alloc)
        assert r.fails
        assert (r.witness.i, r.witness.j, r.witness.own, r.witness.required) == ("2", "1", 1, F(4, 3))

    def test_not_weak_efm(self, ex1, ex1_alloc):
        w = is_weak_EFM(ex1, ex1_alloc).witness
        assert (w.i, w.j, w.own, w.required) == ("2", "1", 1, F(4, 3))

    def test_ef1m_holds(self, ex1, ex1_alloc):
        assert is_EF1M(ex1, ex1_alloc).holds

    def test_uo_and_po(self, ex1, ex1_alloc):
        assert utilitarian_optimum(ex1) == 4
        assert is_utilitarian_optimal(ex1, ex1_alloc).holds
        assert is_PO_binary(ex1, ex1_alloc).holds

    def test_full_report(self, ex1, ex1_alloc):
        v = full_report(ex1, ex1_alloc).verdicts()
        assert v == {
            "EF": "fails",
            "EF1": "not-applicable",
            "EFX": "not-applicable",
            "EFM": "fails",
            "weakEFM": "fails",
            "EF1M": "holds",
            "EFXM": "fails",
            "UO": "holds",
            "PO": "holds",
        }


class TestExample2:
    def test_not_ef1m(self, ex2, ex2_alloc):
        w = is_EF1M(ex2, ex2_alloc).witness
        assert (w.i, w.j, w.own, w.required, w.good) == ("1", "2", F(37, 100), F(63, 100), None)

    def test_stronger_notions_fail(self, ex2, ex2_alloc):
        v = full_report(ex2, ex2_alloc).verdicts()
        for name in ("EF", "EFXM", "EFM", "weakEFM", "EF1M"):
            assert v[name] == "fails"
        assert v["PO"] == "not-applicable"


class TestExample3:
    def test_weak_efm_fails(self, ex1, ex3_alloc):
        w = is_weak_EFM(ex1, ex3_alloc).witness
        assert (w.i, w.j, w.own, w.required) == ("1", "2", F(5, 4), F(7, 4))

    def test_recorded_verdicts(self, ex1, ex3_alloc):
        from conftest import FIXTURES

        meta = json.loads((FIXTURES / "example3_allocation.json").read_text())["metadata"]
        v = full_report(ex1, ex3_alloc).verdicts()
        for name, expected in meta["checked"].items():
            assert v[name] == expected

    def test_uo_fails(self, ex1, ex3_alloc):
        assert welfare(ex1, ex3_alloc) == F(7, 2)
        assert is_utilitarian_optimal(ex1, ex3_alloc).fails

    def test_po_binary_not_decided_for_nonlinear(self, ex1, ex3_alloc):
        assert verdict(is_PO_binary(ex1, ex3_alloc)) == "not-applicable"


class TestIndivisible:
    def setup_method(self):
        self.inst = make_instance(["1", "2"], {"g1": {"1": 1, "2": 1}, "g2": {"1": 1, "2": 1}, "g3": {"1": 3, "2": 1}})

    def test_ef1_but_not_efx(self):
        a = make_allocation(self.inst, {"1": (["g1"], {}), "2": (["g2", "g3"], {})})
        assert is_EF1_indivisible(self.inst, a).holds
        r = is_EFX_indivisible(self.inst, a)
        assert r.fails and r.witness.good == "g2"
        assert (r.witness.own, r.witness.required) == (1, 3)

    def test_single_good(self):
        inst = make_instance(["1", "2"], {"g": {"1": 1, "2": 1}})
        for holder in ("1", "2"):
            a = make_allocation(inst, {holder: (["g"], {})})
            assert is_EF1_indivisible(inst, a).holds and is_EFX_indivisible(inst, a).holds

    def test_nothing_to_envy(self):
        inst = make_instance(["1", "2"], {"g": {"1": 1, "2": 1}})
        a = make_allocation(inst, {"1": (["g"], {})})
        assert is_EF1_indivisible(inst, a).holds

    def test_mixed_instance_not_applicable(self, ex1, ex1_alloc):
        assert verdict(is_EF1_indivisible(ex1, ex1_alloc)) == "not-applicable"

    def test_efm_matches_ef1_without_cake(self):
        a = make_allocation(self.inst, {"1": (["g1"], {}), "2": (["g2", "g3"], {})})
        assert is_EFM(self.inst, a).verdict == is_EF1_indivisible(self.inst, a).verdict


class TestDivisibleOnly:
    def test_perfect_partition_is_ef(self, ex1):
        inst = make_instance(["1", "2", "3"], divisible={"c": {"1": [(0, F(1, 2), 2), (F(1, 2), 1, 0)], "2": 1, "3": 3}})
        parts = perfect_partition(inst, Piece.full("c"), 3)
        a = make_allocation(
            inst, {a: ((), {"c": [(iv.lo, iv.hi) for iv in p.intervals]}) for a, p in zip(inst.agents, parts)}
        )
        assert is_EF(inst, a).holds
        assert is_EFM(inst, a).holds

    def test_single_agent_everything_holds(self, single_agent):
        a = make_allocation(single_agent, {"1": (["g"], {})})
        assert full_report(single_agent, a).all_hold


class TestEfficiency:
    def test_po_fails_when_valued_good_misplaced(self):
        inst = make_instance(["1", "2"], {"g": {"1": 1, "2": 0}, "h": {"1": 0, "2": 1}})
        a = make_allocation(inst, {"1": (["h"], {}), "2": (["g"], {})})
        assert is_PO_binary(inst, a).fails

    def test_po_not_applicable_for_general(self, ex2, ex2_alloc):
        assert verdict(is_PO_binary(ex2, ex2_alloc)) == "not-applicable"


class TestSlack:
    def test_slack_rescues_small_envy(self, ex1, ex1_alloc):
        assert is_EF(ex1, ex1_alloc, slack=F(1, 3)).holds
        assert is_EF(ex1, ex1_alloc, slack=F(1, 4)).fails

    def test_report_json(self, ex1, ex1_alloc):
        doc = json.loads(full_report(ex1, ex1_alloc, F(1, 10), ["EF", "EF1M"]).to_json())
        assert doc["slack"] == "1/10"
        assert list(doc["notions"]) == ["EF", "EF1M"]
        assert doc["notions"]["EF"]["witness"] == {"i": "2", "j": "1", "own": "1", "required": "4/3"}

    def test_unknown_notion(self, ex1, ex1_alloc):
        with pytest.raises(KeyError):
            full_report(ex1, ex1_alloc, notions=["nope"])
