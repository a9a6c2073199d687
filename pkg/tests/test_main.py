import json
import logging
from unittest.mock import patch

import pytest

from caterlab.errors import InputParseError, QuadratureError
from caterlab.main import create_parser, main, parse_numbers, read_tuple_file
from caterlab.reports import load_schema, missing_keys


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Keep runs in-process and drop the stderr handler bound to a captured stream"""
    monkeypatch.setenv("CATERLAB_WORKERS", "1")
    yield
    root = logging.getLogger("caterlab")
    for handler in [h for h in root.handlers if getattr(h, "_caterlab", False)]:
        root.removeHandler(handler)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


# parsing helpers

def test_parse_numbers():
    """Comma separated text, with the cast applied per entry"""
    assert parse_numbers("1, 2,3") == [1.0, 2.0, 3.0]
    assert parse_numbers("2,3,1", int, "permutation") == [2, 3, 1]
    for text in ("1,,2", "1,a", ""):
        with pytest.raises(InputParseError):
            parse_numbers(text)


def test_read_tuple_file(tmp_path):
    """One tuple per line, blank lines skipped"""
    path = tmp_path / "tuples.csv"
    path.write_text("1,2,3\n\n0.01,0.5,1\n")
    assert read_tuple_file(str(path)) == [[1.0, 2.0, 3.0], [0.01, 0.5, 1.0]]
    with pytest.raises(InputParseError):
        read_tuple_file(str(tmp_path / "missing.csv"))


# eval

def test_eval_chain(capsys):
    """(1, 2, 3): C_lower = 8, C = 12, C_upper = 32"""
    code, doc = run_json(capsys, "eval", "--tuple", "1,2,3")
    assert code == 0
    result = doc["results"][0]
    assert (result["lower"], result["C"], result["upper"]) == pytest.approx((8.0, 12.0, 32.0))
    assert [r["verdict"] for r in result["reports"]] == ["holds", "holds"]
    assert doc["manifest"]["command"] == "eval"


def test_eval_single_values(capsys):
    """--which picks one function; F needs an assignment"""
    code, doc = run_json(capsys, "eval", "--tuple", "1,1,1", "--which", "C")
    assert code == 0 and doc["results"][0]["value"] == 3.0
    code, doc = run_json(capsys, "eval", "--tuple", "1,2,3", "--which", "F", "--perm", "2,3,1")
    assert code == 0 and doc["results"][0]["value"] == pytest.approx(12.0)
    code, doc = run_json(capsys, "eval", "--tuple", "1,2,3", "--which", "F")
    assert code == 2 and doc["error"]["kind"] == "parse_error"


def test_eval_tuple_file_and_construction(capsys, tmp_path):
    """Tuples can come from a file or from the epsilon construction"""
    path = tmp_path / "tuples.csv"
    path.write_text("1,2,3\n0.01,0.5,1\n")
    code, doc = run_json(capsys, "eval", "--tuple-file", str(path))
    assert code == 0 and len(doc["results"]) == 2
    assert doc["results"][1]["reports"][0]["verdict"] == "violated"
    code, doc = run_json(capsys, "eval", "--remark42", "6")
    assert code == 0 and doc["results"][0]["tuple"]["hypothesis_H"]


@pytest.mark.parametrize(
    "argv, exit_code",
    [
        (["eval", "--tuple", "1,x,3"], 2),
        (["eval", "--tuple", "1"], 3),
        (["eval", "--tuple", "3,1,2"], 3),
        (["eval", "--tuple", "0,2"], 3),
    ],
)
def test_eval_errors(capsys, argv, exit_code):
    """Parse errors exit 2 and domain errors exit 3, each with an error document"""
    code, doc = run_json(capsys, *argv)
    assert code == exit_code
    assert doc["error"]["exit_code"] == exit_code


def test_eval_contradiction(capsys):
    """A falsified proved comparison exits 4 with the offending report"""
    with patch("caterlab.rearrangement.cater_C_lower", return_value=100.0):
        code, doc = run_json(capsys, "eval", "--tuple", "1,2,3")
    assert code == 4
    assert doc["error"]["kind"] == "contradiction"
    assert doc["error"]["evidence"]["verdict"] == "violated"


# oracle

def test_oracle(capsys):
    """Six assignments, extremes at the reverse and identity assignments"""
    code, doc = run_json(capsys, "oracle", "--tuple", "1,2,3")
    assert code == 0
    scan = doc["results"][0]["scan"]
    assert scan["count"] == 6
    assert scan["min_perm"] == [3, 2, 1] and scan["max_perm"] == [1, 2, 3]
    assert doc["results"][0]["chain"] is not None


def test_oracle_cap(capsys):
    """n above the cap is a resource error"""
    code, doc = run_json(capsys, "oracle", "--tuple", "1,2,3", "--n-cap", "2")
    assert code == 3 and doc["error"]["kind"] == "resource_error"


# search

SEARCH = ["search", "--target", "lower", "--region", "hypothesis-fail", "--n", "3", "--samples", "10000", "--seed", "7"]


def test_search_finds_counterexamples(capsys):
    """Outside the hypothesis the lower comparison has seeded counterexamples"""
    code, doc = run_json(capsys, *SEARCH)
    assert code == 0
    assert doc["summary"]["findings"] >= 1
    assert all(f["margin"] < 0 and not f["hypothesis_H"] for f in doc["findings"])
    assert doc["manifest"]["seed"] == 7


def test_search_is_reproducible(capsys):
    """Same seed, same findings"""
    _, first = run_json(capsys, *SEARCH)
    _, second = run_json(capsys, *SEARCH)
    assert first["findings"] == second["findings"]


def test_search_streams_findings(capsys):
    """--stream prints every finding as a JSON line on stderr, in document order"""
    code = main([*SEARCH, "--stream"])
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    streamed = [json.loads(line) for line in captured.err.splitlines() if line.startswith("{")]
    assert code == 0 and streamed and streamed == doc["findings"]


def test_search_needs_seed(capsys):
    """--seed is mandatory"""
    with pytest.raises(SystemExit) as excinfo:
        main(["search", "--n", "3"])
    assert excinfo.value.code == 2


def test_search_upper_has_no_findings(capsys):
    """C <= C_upper holds everywhere"""
    code, doc = run_json(capsys, "search", "--target", "upper", "--n", "4", "--samples", "5000", "--seed", "3")
    assert code == 0 and doc["findings"] == []


@pytest.mark.parametrize("value", ["1,2,3", "2,1", "a,b"])
def test_search_bad_range(capsys, value):
    """Malformed or empty ranges exit 2"""
    code, doc = run_json(capsys, "search", "--seed", "1", "--range", value)
    assert code == 2


# constants and limits

def test_constants(capsys):
    """epsilon and e^(-1/e) with their residuals"""
    code, doc = run_json(capsys, "constants")
    assert code == 0
    by_name = {c["name"]: c for c in doc["constants"]}
    assert by_name["epsilon"]["value"] == pytest.approx(0.5173446105467452, abs=1e-13)
    assert by_name["exp_neg_exp_inv"]["value"] == pytest.approx(0.6922006275553464, abs=1e-15)


def test_limit(capsys):
    """Affine f gives a shrinking gap table"""
    code, doc = run_json(capsys, "limit", "--f", "affine:1,1", "--n", "10,100,1000")
    assert code == 0
    convergence = doc["convergence"]
    assert [row["n"] for row in convergence["rows"]] == [10, 100, 1000]
    assert convergence["trend"] == "shrinking"
    assert convergence["integral"] == pytest.approx(2.0504462345347316, abs=1e-9)


def test_limit_large_integrand(capsys):
    """A self power near 1e13 still gives an integral instead of exhausting the panels"""
    code, doc = run_json(capsys, "limit", "--f", "exp_scaled:1,2.5", "--tol", "1e-10", "--n", "10,100")
    assert code == 0
    assert doc["convergence"]["integral"] > 1e10


@pytest.mark.parametrize("argv, exit_code", [(["--f", "affine:1"], 2), (["--f", "cubic:1"], 2), (["--f", "const:2", "--n", "100,10"], 3)])
def test_limit_errors(capsys, argv, exit_code):
    """Bad function specs and unordered n lists are refused"""
    code, _ = run_json(capsys, "limit", *argv)
    assert code == exit_code


def test_limit_quadrature_failure(capsys):
    """A quadrature failure exits 5 and reports the estimate reached"""
    failure = QuadratureError("panel budget exhausted", estimate=1.0)
    with patch("caterlab.explorer.limits.adaptive_gauss_legendre", side_effect=failure):
        code, doc = run_json(capsys, "limit", "--f", "affine:1,1")
    assert code == 5
    assert doc["error"]["context"]["achieved_estimate"] == 1.0


# lemmas

def test_lemmas_single_battery(capsys):
    """One battery plus the infimum sequences and the t^t minimum"""
    code, doc = run_json(capsys, "lemmas", "--battery", "two_var", "--samples", "500", "--seed", "3")
    assert code == 0
    assert [b["name"] for b in doc["batteries"]] == ["two_var"]
    assert doc["batteries"][0]["ok"]
    assert len(doc["infima"]) == 6
    assert doc["manifest"]["seed"] == 3


def test_lemmas_default_seed(capsys):
    """Without --seed the default is used and recorded"""
    code, doc = run_json(capsys, "lemmas", "--battery", "swap_inequality", "--samples", "200")
    assert code == 0 and doc["manifest"]["seed"] == 0


def test_lemmas_chain_batteries(capsys):
    """The exhaustive scan covers n = 2..7 and the sampled check n = 8..12"""
    code, doc = run_json(capsys, "lemmas", "--battery", "exhaustive_chain", "--battery", "chain_property", "--tuples", "5", "--samples", "200", "--seed", "1")
    assert code == 0
    names = [b["name"] for b in doc["batteries"]]
    assert names == [f"chain_exhaustive_n{n}" for n in range(2, 8)] + [f"chain_sampled_n{n}" for n in range(8, 13)]
    assert all(b["ok"] for b in doc["batteries"])
    assert doc["batteries"][0]["samples"] == 5 and doc["batteries"][-1]["samples"] == 200


def test_lemmas_every_battery(capsys):
    """A run without --battery covers every battery and passes at seed 0"""
    code, doc = run_json(capsys, "lemmas", "--seed", "0", "--samples", "1000", "--tuples", "3")
    assert code == 0
    assert all(b["ok"] for b in doc["batteries"])
    assert {"chain_lower", "swap_chain", "chain_exhaustive_n7", "chain_sampled_n12"} <= {b["name"] for b in doc["batteries"]}


# output and configuration

def test_csv_output(capsys):
    """--format csv prints a manifest comment, a header and one row per tuple"""
    code, out = run(capsys, "eval", "--tuple", "1,1,1", "--which", "C", "--format", "csv")
    assert code == 0
    first, *table = out.splitlines()
    assert first.startswith("# manifest: ")
    manifest = json.loads(first[len("# manifest: "):])
    assert manifest["command"] == "eval" and manifest["schema_version"]
    assert table == ["tuple,which,value", "1.0 1.0 1.0,C,3.0"]


def test_bad_environment(capsys, monkeypatch):
    """An unparseable worker count is a configuration error"""
    monkeypatch.setenv("CATERLAB_WORKERS", "abc")
    code, doc = run_json(capsys, "constants")
    assert code == 2 and doc["error"]["kind"] == "configuration_error"


def test_documents_match_schemas(capsys):
    """Success and error documents carry every required key"""
    _, doc = run_json(capsys, *SEARCH)
    assert missing_keys(doc, load_schema("document")) == []
    _, doc = run_json(capsys, "lemmas", "--battery", "cater_2", "--samples", "200", "--seed", "1")
    assert missing_keys(doc, load_schema("document")) == []
    _, error = run_json(capsys, "eval", "--tuple", "3,1,2")
    assert missing_keys(error, load_schema("error")) == []
    assert missing_keys({"manifest": {}}, load_schema("document"))[:2] == ["schema_version", "manifest.command"]


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "--tuple", "1,2"],
        ["oracle", "--remark42", "4"],
        ["search", "--seed", "1"],
        ["constants"],
        ["limit", "--f", "const:1"],
        ["lemmas"],
    ],
)
def test_parser_subcommands(argv):
    """Every workflow is a subcommand"""
    assert create_parser().parse_args(argv).command == argv[0]
