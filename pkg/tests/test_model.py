import json
from fractions import Fraction as F

import pytest

from fairdiv.model import (
    AllocationError,
    Interval,
    Piece,
    SchemaError,
    as_rational,
    classify_instance,
    format_rational,
    make_allocation,
    make_instance,
    normalize_allocation,
    parse_allocation,
    parse_instance,
    parse_rational,
    parse_tolerance,
    serialize_allocation,
    serialize_instance,
)
from conftest import utilities


class TestRationals:
    @pytest.mark.parametrize(
        "text, value",
        [("0.37", F(37, 100)), ("3/2", F(3, 2)), ("-4", F(-4)), ("0", F(0)), ("1.0", F(1))],
    )
    def test_parse(self, text, value):
        assert parse_rational(text) == value

    @pytest.mark.parametrize("text", ["1/0", "1e-3", "abc", "", "1/", "0x10", "nan", "1/-2"])
    def test_reject(self, text):
        with pytest.raises(SchemaError):
            parse_rational(text)

    def test_tolerance_accepts_scientific(self):
        assert parse_tolerance("1e-9") == F(1, 10**9)
        with pytest.raises(SchemaError):
            parse_tolerance("inf")

    def test_floats_refused(self):
        with pytest.raises(SchemaError):
            as_rational(0.5)

    def test_format(self):
        assert format_rational(F(6, 4)) == "3/2"
        assert format_rational(F(2)) == "2"


def test_interval_bounds():
    with pytest.raises(SchemaError):
        Interval(F(1, 2), F(1, 2))
    with pytest.raises(SchemaError):
        Interval(F(0), F(3, 2))


def test_piece_merges_adjacent():
    p = Piece.of("c", [(F(1, 3), F(1, 2)), (0, F(1, 3))])
    assert p.intervals == (Interval(F(0), F(1, 2)),)
    assert p.measure == F(1, 2)


class TestParseInstance:
    def test_example1(self, ex1):
        assert ex1.agents == ("1", "2", "3", "4")
        assert [g.id for g in ex1.indivisible] == ["a", "b"]
        cls = classify_instance(ex1)
        assert cls.is_binary and not cls.is_linear

    def test_example2_classification(self, ex2):
        cls = classify_instance(ex2)
        assert not cls.is_binary and cls.is_linear
        assert ex2.value("1", "a") == F(37, 100)

    def test_all_unit_constant_is_binary_linear(self):
        inst = make_instance(["1", "2"], {"g": {"1": 1, "2": 0}}, {"c": {"1": 0, "2": 1}})
        cls = classify_instance(inst)
        assert cls.is_binary and cls.is_linear

    def test_single_agent_single_good(self, single_agent):
        assert single_agent.n == 1

    def _doc(self, density):
        return json.dumps(
            {
                "format": "fairdiv/1",
                "agents": ["1"],
                "indivisible": [],
                "divisible": [{"id": "c", "density": {"1": density}}],
            }
        )

    def test_density_gap(self):
        with pytest.raises(SchemaError, match="density gap"):
            parse_instance(self._doc([{"from": "0", "to": "1/2", "rate": "1"}]))

    def test_density_overlap(self):
        with pytest.raises(SchemaError):
            parse_instance(
                self._doc([{"from": "0", "to": "2/3", "rate": "1"}, {"from": "1/2", "to": "1", "rate": "1"}])
            )

    def test_negative_rate(self):
        with pytest.raises(SchemaError):
            parse_instance(self._doc([{"from": "0", "to": "1", "rate": "-1"}]))

    def test_float_in_document_refused(self):
        with pytest.raises(SchemaError):
            parse_instance(self._doc([{"from": "0", "to": "1", "rate": 0.5}]))

    def test_wrong_format_tag(self):
        doc = json.loads(self._doc([{"from": "0", "to": "1", "rate": "1"}]))
        doc["format"] = "other/2"
        with pytest.raises(SchemaError):
            parse_instance(json.dumps(doc))

    def test_good_nobody_values(self):
        with pytest.raises(SchemaError):
            make_instance(["1", "2"], {"g": {"1": 0, "2": 0}, "h": {"1": 1, "2": 1}})

    def test_duplicate_ids(self):
        with pytest.raises(SchemaError):
            make_instance(["1"], {"x": {"1": 1}}, {"x": {"1": 1}})

    def test_round_trip(self, ex1, ex2):
        for inst in (ex1, ex2):
            text = serialize_instance(inst)
            assert parse_instance(text) == inst
            assert serialize_instance(parse_instance(text)) == text


class TestAllocation:
    def test_degenerate_piece_dropped(self, ex1):
        a = make_allocation(
            ex1,
            {
                "1": (["a"], {"c": [(0, F(1, 3))]}),
                "2": (["b"], {"c": [(F(1, 3), F(1, 3))]}),
                "3": ((), {"c": [(F(1, 3), F(2, 3))]}),
                "4": ((), {"c": [(F(2, 3), 1)]}),
            },
        )
        assert not a["2"].has_cake
        assert utilities(ex1, a) == (2, 1, F(1, 2), F(1, 2))

    def test_normalize_idempotent(self, ex1, ex1_alloc):
        assert normalize_allocation(ex1, ex1_alloc) == ex1_alloc

    def test_zero_measure_sliver_vanishes(self):
        inst = make_instance(["1", "2"], {"g": {"1": 1, "2": 1}}, {"c": {"1": 1, "2": 1}})
        before = make_allocation(inst, {"1": ((), {"c": [(0, 1)]}), "2": (["g"], {})})
        after = make_allocation(inst, {"1": ((), {"c": [(0, 1)]}), "2": (["g"], {"c": [(1, 1)]})})
        assert before == after
        assert utilities(inst, before) == utilities(inst, after)

    def test_missing_good_rejected(self, ex1):
        with pytest.raises(AllocationError):
            make_allocation(ex1, {"1": (["a"], {"c": [(0, 1)]})})

    def test_overlap_rejected(self, ex1):
        with pytest.raises(AllocationError):
            make_allocation(ex1, {"1": (["a", "b"], {"c": [(0, F(1, 2))]}), "2": ((), {"c": [(F(1, 3), 1)]})})

    def test_good_twice_rejected(self, ex1):
        with pytest.raises(AllocationError):
            make_allocation(ex1, {"1": (["a", "b"], {"c": [(0, 1)]}), "2": (["a"], {})})

    def test_round_trip_with_metadata(self, ex1, ex1_alloc):
        text = serialize_allocation(ex1_alloc, {"objective": "mnw"})
        assert parse_allocation(ex1, text) == ex1_alloc
        assert json.loads(text)["metadata"] == {"objective": "mnw"}
