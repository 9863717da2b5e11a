"""Command line behavior: outputs, JSON reports, exit codes."""
import json
import subprocess
import sys

import pytest

from decolog.cli import main
from decolog.deduction import check_derivation
from decolog.files import corpus_path, parse_derivation, parse_equation, parse_theory

BANK = str(corpus_path("bank.dth"))
BANK_MODEL = str(corpus_path("bank_mod4.model"))
BANK_PROOF = str(corpus_path("bank_proof.drv"))
TC = str(corpus_path("throwcatch.dth"))
TC_MODEL = str(corpus_path("throwcatch_mod2.model"))
TC_PROOF = str(corpus_path("throwcatch_proof.drv"))


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheck:
    def test_bank_reports_definition_ranks(self, capsys):
        code, out, _ = run(capsys, "check", BANK)
        assert code == 0
        assert "def f : Unit -> Int [modifier, rank 2]" in out
        assert "def g : Unit -> Int [observer, rank 1]" in out

    def test_json_report(self, capsys):
        code, out, _ = run(capsys, "check", BANK, "--json")
        assert code == 0
        data = json.loads(out)
        ranks = {d["name"]: d["rank"] for d in data["definitions"]}
        assert ranks == {"f": 2, "g": 1}
        assert data["ok"] is True
        assert data["effect"] == "states"
        assert [o["keyword"] for o in data["operations"]] == \
            ["pure", "pure", "observer", "modifier"]

    def test_keyword_effect_mismatch_is_semantic(self, capsys, tmp_path):
        path = tmp_path / "bad.dth"
        path.write_text("effect exceptions\ntype A\nop r : A -> A observer\n")
        code, _, err = run(capsys, "check", str(path))
        assert code == 1
        assert "observer" in err

    def test_syntax_error_exits_2(self, capsys, tmp_path):
        path = tmp_path / "bad.dth"
        path.write_text("effect states\ntype A\nop u : A -> A pure\n"
                        "axiom strong <u, u == u\n")
        code, _, err = run(capsys, "check", str(path))
        assert code == 2
        assert "line 4" in err

    def test_unreadable_file_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "check", str(tmp_path / "missing.dth"))
        assert code == 2
        assert "cannot read" in err


class TestDecorate:
    def test_definition_rank(self, capsys):
        code, out, _ = run(capsys, "decorate", BANK, "f")
        assert code == 0
        assert "[modifier, rank 2]" in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "decorate", BANK, "plus . <seven, balance>",
                           "--json")
        assert code == 0
        data = json.loads(out)
        assert data["rank"] == 1
        assert data["keyword"] == "observer"
        assert data["dom"] == "Unit"

    def test_ill_formed_term_exits_1(self, capsys):
        code, _, err = run(capsys, "decorate", BANK, "seven . seven")
        assert code == 1
        assert err


class TestVerify:
    def test_bank_proof_prints_the_conclusion(self, capsys):
        code, out, _ = run(capsys, "verify", BANK, BANK_PROOF)
        assert code == 0
        assert out.strip() == "weak: balance∘deposit∘seven ≈ plus∘<seven,balance>"

    def test_throwcatch_proof(self, capsys):
        code, out, _ = run(capsys, "verify", TC, TC_PROOF)
        assert code == 0
        assert out.strip() == "weak: catchZero∘catchZero∘throw ≈ zero"

    def test_rejected_derivation_names_the_node(self, capsys):
        code, _, err = run(capsys, "verify", BANK, TC_PROOF)
        assert code == 1
        assert "premise" in err

    def test_json(self, capsys):
        code, out, _ = run(capsys, "verify", BANK, BANK_PROOF, "--json")
        assert code == 0
        data = json.loads(out)
        assert data["ok"] is True
        assert data["strength"] == "weak"
        assert data["lhs"] == "balance . deposit . seven"


class TestProve:
    def test_found_derivation_reparses_and_checks(self, capsys):
        code, out, _ = run(capsys, "prove", TC,
                           "weak catchZero . catchZero . throw ~ zero")
        assert code == 0
        theory = parse_theory(corpus_path("throwcatch.dth").read_text())
        d = parse_derivation(out, theory)
        goal = parse_equation("weak catchZero . catchZero . throw ~ zero", theory)
        check_derivation(theory, d, expected=goal)

    def test_unprovable_within_depth_exits_1(self, capsys):
        code, _, err = run(capsys, "prove", BANK, "strong f == g", "--depth", "5")
        assert code == 1
        assert "may still be derivable" in err

    def test_json(self, capsys):
        code, out, _ = run(capsys, "prove", BANK, "weak f ~ g", "--json")
        assert code == 0
        data = json.loads(out)
        assert data["found"] is True
        assert "derivation" in data


class TestModelCheck:
    def test_weak_holds(self, capsys):
        code, out, _ = run(capsys, "model-check", BANK, BANK_MODEL, "weak f ~ g")
        assert code == 0
        assert out.startswith("holds:")

    def test_strong_violated_with_witness(self, capsys):
        code, out, _ = run(capsys, "model-check", BANK, BANK_MODEL,
                           "strong f == g")
        assert code == 1
        assert "at (*, 0): lhs gives (3, 3), rhs gives (3, 0)" in out

    def test_trivial_identity(self, capsys):
        code, _, _ = run(capsys, "model-check", BANK, BANK_MODEL,
                         "strong id(Int) == id(Int)")
        assert code == 0

    def test_incomplete_model_exits_3(self, capsys, tmp_path):
        path = tmp_path / "partial.model"
        path.write_text("effectcarrier = {0}\ncarrier Int = {0}\n"
                        "table seven\n  * -> 0\n")
        code, _, err = run(capsys, "model-check", BANK, str(path), "weak f ~ g")
        assert code == 3
        assert "model mismatch" in err

    def test_json_violation(self, capsys):
        code, out, _ = run(capsys, "model-check", BANK, BANK_MODEL,
                           "strong f == g", "--json")
        assert code == 1
        data = json.loads(out)
        assert data["holds"] is False
        assert data["witness"] == "(*, 0)"


class TestFindCex:
    def test_strong_separation_found(self, capsys):
        code, out, _ = run(capsys, "find-cex", BANK, "strong f == g")
        assert code == 0
        assert "countermodel" in out
        assert "witness (*, " in out

    def test_weak_equation_has_no_countermodel(self, capsys):
        code, out, _ = run(capsys, "find-cex", BANK, "weak f ~ g",
                           "--max-carrier", "2")
        assert code == 1
        assert "no countermodel" in out

    def test_json_model_is_structured(self, capsys):
        code, out, _ = run(capsys, "find-cex", BANK, "strong f == g", "--json")
        assert code == 0
        data = json.loads(out)
        assert data["found"] is True
        assert sorted(data["model"]["tables"]) == \
            ["balance", "deposit", "plus", "seven"]
        assert data["model"]["carriers"]["Int"] == [0]

    def test_enum_ceiling_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("DECOLOG_MAX_ENUM", "10")
        code, _, err = run(capsys, "find-cex", BANK, "strong f == g")
        assert code == 1
        assert "ceiling is 10" in err

    def test_jobs_find_the_same_countermodel(self, capsys):
        _, out1, _ = run(capsys, "find-cex", BANK, "strong f == g", "--json")
        _, out4, _ = run(capsys, "find-cex", BANK, "strong f == g",
                         "--jobs", "4", "--json")
        assert json.loads(out1) == json.loads(out4)


class TestDualize:
    def test_bank_refused(self, capsys):
        code, _, err = run(capsys, "dualize", BANK)
        assert code == 1
        assert "no dual exists" in err
        assert "pair" in err

    def test_throwcatch_emits_a_parseable_states_theory(self, capsys):
        code, out, _ = run(capsys, "dualize", TC)
        assert code == 0
        dual = parse_theory(out)
        assert dual.effect.value == "states"
        assert dual.op("throw").cod.__class__.__name__ == "UnitType"
        assert "# correspondence:" in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "dualize", TC, "--json")
        assert code == 0
        data = json.loads(out)
        assert data["effect"] == "states"
        assert len(data["correspondence"]) == 3
        names = [row["name"] for row in data["correspondence"]]
        assert names == ["zero", "throw", "catchZero"]


class TestValidateRules:
    def test_states_all_sound_at_carrier_2(self, capsys):
        code, out, _ = run(capsys, "validate-rules", "states",
                           "--max-carrier", "2")
        assert code == 0
        assert "all rules validated" in out
        assert "FAIL" not in out

    def test_singleton_state_cannot_exhibit_countermodels(self, capsys):
        code, out, _ = run(capsys, "validate-rules", "states",
                           "--max-carrier", "1")
        assert code == 1
        assert "FAIL" in out

    def test_singleton_carriers_still_separate_exceptions(self, capsys):
        code, out, _ = run(capsys, "validate-rules", "exceptions",
                           "--max-carrier", "1")
        assert code == 0
        assert "all rules validated" in out

    def test_json(self, capsys):
        code, out, _ = run(capsys, "validate-rules", "exceptions",
                           "--max-carrier", "1", "--json")
        assert code == 0
        data = json.loads(out)
        assert data["effect"] == "exceptions"
        assert {r["expectation"] for r in data["results"]} == \
            {"sound", "countermodel"}


class TestEntryPoints:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "decolog.cli", "check", BANK],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "def f" in proc.stdout

    def test_unknown_command_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2
