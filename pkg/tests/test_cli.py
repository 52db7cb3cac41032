import json
import os

import pytest

from operad_forge.cli import main

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fx(name):
    return os.path.join(FIXTURES, name)


class TestValidate:
    def test_golden_fixture_ok(self, capsys):
        assert main(["validate", fx("commutative_window3.json")]) == 0
        assert capsys.readouterr().out == "ok\n"

    def test_modular_fixture_ok(self):
        assert main(["validate", fx("endomorphism_dim1.json")]) == 0

    def test_sigma_module_ok(self):
        assert main(["validate", fx("binary_generator.json")]) == 0

    def test_tampered_fixture_fails(self, tmp_path, capsys):
        with open(fx("commutative_window3.json")) as fh:
            payload = json.load(fh)
        entry = payload["compositions"][0]
        first_block = next(iter(entry["blocks"].values()))
        first_cell = next(iter(first_block.values()))
        first_cell[0][1] = "-1"
        bad = tmp_path / "tampered.json"
        bad.write_text(json.dumps(payload))
        assert main(["validate", str(bad)]) == 1

    def test_malformed_json_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        assert main(["validate", str(bad)]) == 2
        assert "malformed" in capsys.readouterr().err

    def test_wrong_schema_exit_2(self, tmp_path):
        bad = tmp_path / "schema.json"
        bad.write_text(json.dumps({"format": "nope"}))
        assert main(["validate", str(bad)]) == 2

    def test_missing_file_exit_2(self):
        assert main(["validate", "no_such_file.json"]) == 2


class TestHomology:
    def test_cone_of_identity_all_zero(self, capsys):
        assert main(["homology", fx("acyclic_arity2.json")]) == 0
        out = capsys.readouterr().out
        line = [l for l in out.splitlines() if l.startswith("2")]
        assert line == ["2\t-\t0"]

    def test_commutative_table(self, capsys):
        assert main(["homology", fx("commutative_window3.json")]) == 0
        out = capsys.readouterr().out
        assert "2\t0\t1" in out and "3\t0\t1" in out


class TestFree:
    def test_free_operad_from_generators(self, tmp_path, capsys):
        out = tmp_path / "free.json"
        assert main(["free", fx("binary_generator.json"),
                     "--max-arity", "3", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "operad"
        assert payload["components"]["3"]["dims"] == {"0": "3"} \
            or payload["components"]["3"]["dims"] == {"0": 3}

    def test_free_modular_from_generators(self, tmp_path):
        out = tmp_path / "freemod.json"
        assert main(["free", fx("modular_generator_03.json"),
                     "--max-dim", "1", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "modular"
        assert payload["components"]["0,4"]["dims"] == {"0": 3}

    def test_free_requires_matching_flag(self, capsys):
        assert main(["free", fx("binary_generator.json")]) == 1

    def test_free_on_operad_document_fails(self):
        assert main(["free", fx("commutative_window3.json"),
                     "--max-arity", "3"]) == 1


class TestMinimalModel:
    def test_model_with_tower(self, tmp_path):
        out = tmp_path / "mm.json"
        assert main(["minimal-model", fx("commutative_window3.json"),
                     "--max", "3", "--seed", "0", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "operad"
        assert "tower" in payload
        levels = {entry["level"]: entry["components"]
                  for entry in payload["tower"]}
        assert levels[2]["2"]["dims"] == {"0": 1}
        assert levels[3]["3"]["dims"] == {"1": 2}

    def test_deterministic_bytes(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        for out in (out1, out2):
            assert main(["minimal-model", fx("commutative_window3.json"),
                         "--max", "3", "--seed", "9", "--out",
                         str(out)]) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestCheckFormality:
    def test_witness_for_formal_fixture(self, tmp_path):
        out = tmp_path / "wit.json"
        assert main(["check-formality", fx("commutative_window3.json"),
                     "--alpha", "2", "--max", "3", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "formality-witness"
        assert [a["label"] for a in payload["arrows"]] \
            == ["model", "inclusion", "projection"]

    def test_modular_witness(self, capsys):
        assert main(["check-formality", fx("endomorphism_dim1.json"),
                     "--alpha", "2", "--max", "1"]) == 0
        out = capsys.readouterr().out
        assert "formality-witness" in out


class TestEnumerate:
    def test_stable_graphs_03(self, capsys):
        assert main(["enumerate", "--stable-graphs", "0", "3"]) == 0
        out = capsys.readouterr().out
        assert "stable graphs of genus 0 with 3 legs: 1" in out

    def test_trees_listing(self, capsys):
        assert main(["enumerate", "--trees", "3"]) == 0
        out = capsys.readouterr().out
        assert "reduced trees with 3 leaves: 4" in out

    def test_json_listing(self, capsys):
        assert main(["enumerate", "--stable-graphs", "1", "1",
                     "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload) == 2
        assert sorted(item["automorphisms"] for item in payload) == [1, 2]


class TestAltCheck:
    def test_pass_report(self, capsys):
        assert main(["alt-check", "--dim", "2", "--trials", "3",
                     "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "alt-check passed" in out

    def test_deterministic_output(self, capsys):
        main(["alt-check", "--dim", "2", "--trials", "2", "--seed", "5"])
        first = capsys.readouterr().out
        main(["alt-check", "--dim", "2", "--trials", "2", "--seed", "5"])
        second = capsys.readouterr().out
        assert first == second


class TestFixtureDirOverride:
    def test_env_var_resolution(self, monkeypatch, capsys):
        monkeypatch.setenv("OPERAD_FORGE_FIXTURES", FIXTURES)
        assert main(["validate", "commutative_window3.json"]) == 0
