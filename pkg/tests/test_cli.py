import json
import subprocess
import sys

import pytest

from fairdiv.cli import main
from fairdiv.model import classify_instance, parse_instance
from conftest import FIXTURES

EX1 = str(FIXTURES / "example1_instance.json")
EX1_ALLOC = str(FIXTURES / "example1_allocation.json")
EX2 = str(FIXTURES / "example2_instance.json")
COV3 = str(FIXTURES / "coverage3_instance.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCheck:
    def test_weak_efm_fails(self, capsys):
        code, out, _ = run(capsys, "check", "--instance", EX1, "--allocation", EX1_ALLOC, "--notions", "weak-efm")
        assert code == 1
        w = json.loads(out)["notions"]["weakEFM"]["witness"]
        assert (w["i"], w["j"], w["required"]) == ("2", "1", "4/3")

    def test_ef1m_holds(self, capsys):
        code, _, _ = run(capsys, "check", "--instance", EX1, "--allocation", EX1_ALLOC, "--notions", "ef1m")
        assert code == 0

    def test_missing_file(self, capsys):
        code, out, err = run(capsys, "check", "--instance", "/no/such/file", "--allocation", EX1_ALLOC)
        assert code == 2 and out == "" and "cannot read" in err

    def test_unknown_notion(self, capsys):
        code, _, err = run(capsys, "check", "--instance", EX1, "--allocation", EX1_ALLOC, "--notions", "bogus")
        assert code == 2 and "unknown notion" in err

    def test_malformed_slack(self, capsys):
        code, _, _ = run(capsys, "check", "--instance", EX1, "--allocation", EX1_ALLOC, "--slack", "abc")
        assert code == 2

    def test_malformed_allocation(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format": "fairdiv/1", "1": {"indivisible": ["a"], "pieces": []}}')
        code, _, _ = run(capsys, "check", "--instance", EX1, "--allocation", str(bad))
        assert code == 2


class TestSolve:
    def test_example2_leximin(self, capsys, tmp_path):
        out = tmp_path / "a.json"
        code, _, _ = run(
            capsys, "solve", "--instance", EX2, "--objective", "leximin", "--mode", "approx", "--scope", "all", "--out", str(out)
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["metadata"]["utilities"] == {
            "1": "0.37000000000000000000",
            "2": "0.30000000000000000000",
            "3": "1.00000000000000000000",
        }

    def test_phi_output_pipes_into_check(self, capsys, tmp_path):
        out = tmp_path / "a.json"
        assert run(capsys, "solve", "--instance", COV3, "--objective", "phi:sq", "--out", str(out))[0] == 0
        code, _, _ = run(capsys, "check", "--instance", COV3, "--allocation", str(out), "--notions", "efxm,po")
        assert code == 0

    def test_stdout_default(self, capsys):
        code, out, _ = run(capsys, "solve", "--instance", EX2, "--objective", "ef1m")
        assert code == 0 and json.loads(out)["format"] == "fairdiv/1"

    @pytest.mark.parametrize("objective", ["mnw", "leximin", "phi:sq"])
    def test_exact_on_general_instance(self, capsys, objective):
        code, _, err = run(capsys, "solve", "--instance", EX2, "--objective", objective, "--mode", "exact")
        assert code == 4 and "not applicable" in err

    def test_phi_approx_not_applicable(self, capsys):
        assert run(capsys, "solve", "--instance", COV3, "--objective", "phi:sq", "--mode", "approx")[0] == 4

    def test_too_large(self, capsys):
        code, _, err = run(capsys, "solve", "--instance", EX1, "--objective", "mnw", "--mode", "approx", "--max-agents", "3")
        assert code == 3 and "too large" in err

    def test_raising_caps_needs_acknowledgement(self, capsys):
        code, _, _ = run(capsys, "solve", "--instance", EX1, "--objective", "ef1m", "--max-agents", "20")
        assert code == 2
        code, _, _ = run(capsys, "solve", "--instance", EX1, "--objective", "ef1m", "--max-agents", "20", "--unsafe-large")
        assert code == 0

    def test_scientific_tolerance(self, capsys):
        code, _, _ = run(capsys, "solve", "--instance", EX1, "--objective", "mnw", "--mode", "approx", "--tol", "1e-9")
        assert code == 0

    def test_bad_objective(self, capsys):
        assert run(capsys, "solve", "--instance", EX1, "--objective", "nash")[0] == 2


class TestPartition:
    def test_coverage3(self, capsys):
        code, out, _ = run(capsys, "partition", "--instance", COV3)
        doc = json.loads(out)
        assert code == 0 and doc["q"] == 2 and doc["levels"] == [2, 1]

    def test_single_agent(self, capsys, tmp_path):
        f = tmp_path / "i.json"
        f.write_text(
            json.dumps(
                {
                    "format": "fairdiv/1",
                    "agents": ["1"],
                    "indivisible": [],
                    "divisible": [{"id": "c", "density": {"1": [{"from": "0", "to": "1", "rate": "1"}]}}],
                }
            )
        )
        code, out, _ = run(capsys, "partition", "--instance", str(f))
        assert code == 0 and json.loads(out)["q"] == 1

    def test_nonlinear(self, capsys):
        assert run(capsys, "partition", "--instance", EX1)[0] == 4


class TestGen:
    ARGS = ("gen", "--seed", "7", "--agents", "3", "--indivisible", "2", "--divisible", "1")

    def test_deterministic(self, capsys):
        _, a, _ = run(capsys, *self.ARGS)
        _, b, _ = run(capsys, *self.ARGS)
        assert a == b

    def test_binary_linear_class(self, capsys):
        _, out, _ = run(capsys, *self.ARGS, "--class", "binary-linear")
        cls = classify_instance(parse_instance(out))
        assert cls.is_binary and cls.is_linear

    def test_zero_agents(self, capsys):
        assert run(capsys, "gen", "--seed", "1", "--agents", "0", "--indivisible", "1")[0] == 2

    def test_seed_required(self, capsys):
        assert run(capsys, "gen", "--agents", "2", "--indivisible", "1")[0] == 2

    def test_over_cap(self, capsys):
        assert run(capsys, "gen", "--seed", "1", "--agents", "9", "--indivisible", "1")[0] == 3


class TestOracle:
    def test_discretized(self, capsys):
        code, out, _ = run(capsys, "oracle", "--instance", EX1, "--objective", "mnw", "--slices", "12")
        assert code == 0
        assert sorted(json.loads(out)["utilities"].values()) == ["1", "1/2", "1/2", "2"]

    def test_pareto(self, capsys, tmp_path):
        inst = tmp_path / "i.json"
        alloc = tmp_path / "a.json"
        run(capsys, "gen", "--seed", "3", "--agents", "2", "--indivisible", "3", "--class", "binary", "--out", str(inst))
        run(capsys, "solve", "--instance", str(inst), "--objective", "mnw", "--out", str(alloc))
        code, out, _ = run(capsys, "oracle", "--instance", str(inst), "--pareto", "--allocation", str(alloc))
        assert code == 0 and json.loads(out)["notions"]["PO"]["verdict"] == "holds"

    def test_pareto_needs_allocation(self, capsys):
        assert run(capsys, "oracle", "--instance", EX1, "--pareto")[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fairdiv.cli", "check", "--instance", EX1, "--allocation", EX1_ALLOC, "--notions", "ef1m"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and '"holds"' in proc.stdout
