"""
Tests for the command-line front end: exit codes, plain and JSON output, batch reports.
"""

import io
import json

import pytest
import sympy as sp

from rootrat.app.main import EXIT_EMPTY, EXIT_OK, EXIT_USAGE, parse_substitutions, run
from rootrat.app.services.driver import verify
from rootrat.app.services.expr import parse_rational_function, parse_root


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


class TestRationalize:
    def test_json_report(self):
        code, out, _ = invoke("rationalize", "sqrt(1-x^2-y^2)", "--json")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["status"] == "ok"
        assert payload["input"] == "sqrt(1-x^2-y^2)"
        result = payload["results"][0]
        assert {s["var"] for s in result["substitutions"]} == {"x", "y"}
        assert result["root_value"]
        assert result["strategy"] == "direct"

    def test_json_result_verifies(self):
        _, out, _ = invoke("rationalize", "sqrt(1-x^2-y^2)", "--json")
        result = json.loads(out)["results"][0]
        code, _, _ = invoke("verify", "sqrt(1-x^2-y^2)", "--subs", json.dumps(result))
        assert code == EXIT_OK

    def test_plain_output(self):
        code, out, _ = invoke("rationalize", "sqrt(1-x^2)", "--out-vars", "t")
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0].startswith("x = ")
        assert lines[-1].startswith("root_value = ")

    def test_syntax_error(self):
        code, out, err = invoke("rationalize", "sqrt(x^y)")
        assert code == EXIT_USAGE
        assert out == ""
        assert "non-integer exponent" in err

    def test_nested_root(self):
        code, _, err = invoke("rationalize", "sqrt(x^2+sqrt(x^4+y^3))")
        assert code == EXIT_USAGE
        assert "error" in err

    def test_constant_root_has_no_result(self):
        code, out, err = invoke("rationalize", "sqrt(2)")
        assert code == EXIT_EMPTY
        assert out == ""
        assert "no parametrization found" in err
        assert "Traceback" not in err

    def test_unexpected_failure_is_reported(self, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr("rootrat.app.main.rationalize_root", broken)
        code, out, err = invoke("rationalize", "sqrt(1-x^2)")
        assert code == EXIT_USAGE
        assert out == ""
        assert "internal failure: RuntimeError: boom" in err

    def test_invalid_option_combination(self):
        code, _, err = invoke("rationalize", "sqrt(1-x^2)", "--general-t", "--fix-t", "0")
        assert code == EXIT_USAGE
        assert "invalid options" in err


class TestParametrize:
    def test_circle_with_pinned_point(self):
        code, out, _ = invoke("parametrize", "u^2+x^2-1", "--point=-1,0", "--json")
        assert code == EXIT_OK
        result = json.loads(out)["results"][0]
        values = {s["var"]: s["value"] for s in result["substitutions"]}
        assert values["u"] == "2*t1/(t1^2+1)"

    def test_constant_radicand(self):
        code, _, err = invoke("parametrize", "x^2+1")
        assert code == EXIT_EMPTY
        assert "no parametrization found" in err
        assert "Traceback" not in err

    def test_fix_index_out_of_range(self):
        code, _, err = invoke("parametrize", "u^2-x^3-x^2", "--fix-t", "5")
        assert code == EXIT_USAGE
        assert "fix_index" in err

    def test_fdecomposition_flag_needs_root_shape(self):
        code, _, _ = invoke("parametrize", "x^3+y^3-1", "--force-fdecomp")
        assert code == EXIT_USAGE

    @pytest.mark.slow
    def test_nothing_found(self):
        code, out, err = invoke("parametrize", "u^2*x^2-x^4-x^4*y-x*y^2-x^2*y^2")
        assert code == EXIT_EMPTY
        assert out == ""
        assert "no parametrization found" in err


class TestVerify:
    def test_plain_round_trip(self):
        code, out, _ = invoke("verify", "sqrt(1-x^2)", "--subs", "x=(t^2-1)/(t^2+1)")
        assert code == EXIT_OK
        assert "root_value = 2*t/(t^2+1)" in out

    def test_rejected(self):
        code, _, err = invoke("verify", "sqrt(1-x^2)", "--subs", "x=t")
        assert code == EXIT_EMPTY
        assert "verification failed" in err

    def test_plain_and_json_agree(self):
        _, plain, _ = invoke("verify", "sqrt(1-x^2)", "--subs", "x=(t^2-1)/(t^2+1)")
        _, raw, _ = invoke("verify", "sqrt(1-x^2)", "--subs", "x=(t^2-1)/(t^2+1)", "--json")
        result = json.loads(raw)["results"][0]
        expected = [f"{s['var']} = {s['value']}" for s in result["substitutions"]]
        expected.append(f"root_value = {result['root_value']}")
        assert plain.strip().splitlines() == expected

    def test_parse_substitutions(self):
        pairs = parse_substitutions("x = t; y = t^2")
        assert [str(v) for v, _ in pairs] == ["x", "y"]
        assert parse_substitutions('[{"var": "x", "value": "t"}]')[0][0].name == "x"


class TestSimultaneous:
    def test_shared_substitution(self):
        code, out, _ = invoke("simultaneous", "sqrt(x+1)", "sqrt(x+y+1)", "--json")
        assert code == EXIT_OK
        results = json.loads(out)["results"]
        assert len(results) == 2
        assert all(result["strategy"] == "composed" for result in results)
        assert results[0]["substitutions"] == results[1]["substitutions"]

    def test_json_values_reparse(self):
        roots = ["sqrt(x+1)", "sqrt(x+y+1)"]
        code, out, _ = invoke("simultaneous", *roots, "--json")
        assert code == EXIT_OK
        for root, result in zip(roots, json.loads(out)["results"]):
            value = parse_rational_function(result["root_value"])
            subs = {sp.Symbol(s["var"]): parse_rational_function(s["value"]) for s in result["substitutions"]}
            assert verify(root, subs) is not None
            radicand = parse_root(root).radicand.expr.xreplace(subs)
            assert sp.cancel(value**2 - radicand) == 0

    def test_plain_lists_every_root(self):
        code, out, _ = invoke("simultaneous", "sqrt(x+1)", "sqrt(x+y+1)")
        assert code == EXIT_OK
        assert out.count("root_value = ") == 2


class TestUsage:
    def test_no_command(self):
        code, _, _ = invoke()
        assert code == EXIT_USAGE

    def test_missing_expression(self):
        code, _, err = invoke("rationalize")
        assert code == EXIT_USAGE
        assert "usage error" in err

    def test_unknown_flag(self):
        code, _, _ = invoke("rationalize", "sqrt(x)", "--frobnicate")
        assert code == EXIT_USAGE


class TestBatch:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("", encoding="utf-8")
        code, out, _ = invoke("batch", str(path))
        assert code == EXIT_OK
        assert out.strip() == "succeeded=0 failed=0 errored=0"

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "tasks.txt"
        path.write_text(
            "# circle first\n"
            'rationalize "sqrt(1-x^2)"\n'
            "\n"
            'rationalize "sqrt(x^y)"\n'
            'verify "sqrt(1-x^2)" --subs "x=t"\n',
            encoding="utf-8",
        )
        code, out, _ = invoke("batch", str(path), "--json")
        assert code == EXIT_USAGE
        report = json.loads(out)
        assert (report["succeeded"], report["failed"], report["errored"]) == (1, 1, 1)
        assert [entry["line"] for entry in report["lines"]] == [2, 4, 5]
        assert report["lines"][1]["outcome"] == "errored"
        assert "non-integer exponent" in report["lines"][1]["error"]

    def test_unknown_subcommand_line(self, tmp_path):
        path = tmp_path / "tasks.txt"
        path.write_text("frobnicate x\n", encoding="utf-8")
        code, out, _ = invoke("batch", str(path))
        assert code == EXIT_USAGE
        assert "errored=1" in out

    def test_version_line_does_not_abort(self, tmp_path):
        path = tmp_path / "tasks.txt"
        path.write_text("--version\nverify sqrt(1-x^2) --subs x=0\n", encoding="utf-8")
        code, out, _ = invoke("batch", str(path))
        assert code == EXIT_USAGE
        assert "succeeded=1 failed=0 errored=1" in out

    def test_unreadable_file(self, tmp_path):
        code, _, err = invoke("batch", str(tmp_path / "missing.txt"))
        assert code == EXIT_USAGE
        assert "cannot read" in err
