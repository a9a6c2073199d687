import io
import logging
import math

import numpy as np
import pytest

from caterlab.config import DEFAULT_BAND, IDENTITY_BAND, Band, Settings, configure_logging
from caterlab.cyclic_core import batch_hypothesis
from caterlab.errors import ConfigurationError, ContradictionError, QuadratureError
from caterlab.reports import (
    EQUALITY,
    HOLDS,
    VIOLATED,
    RunManifest,
    build_document,
    dumps,
    inputs_digest,
    make_report,
    require,
    tally,
    write_csv,
)
from caterlab.tools.permutations import iter_lexicographic, next_permutation, split_ranges, unrank
from caterlab.tools.precision import hp_epsilon_residual, hp_exp_neg_exp_inv, hp_margin
from caterlab.tools.quadrature import adaptive_gauss_legendre, panel
from caterlab.tools.sampling import (
    hypothesis_fail_tuples,
    hypothesis_tuples,
    open_unit_pairs,
    phi_above_one_points,
    phi_nested_points,
    random_permutation,
    shard_rng,
)


@pytest.fixture
def rng():
    return shard_rng(2024, 0)


# permutations

def test_next_permutation_steps_and_stops():
    """Successor in lexicographic order, False after the last one"""
    items = [1, 2, 3]
    assert next_permutation(items) and items == [1, 3, 2]
    last = [3, 2, 1]
    assert not next_permutation(last) and last == [3, 2, 1]


def test_unrank_follows_lexicographic_order():
    """Every rank of n = 4 unranks to that position of the full order"""
    assert unrank(3, 0) == [1, 2, 3]
    assert unrank(3, 5) == [3, 2, 1]
    full = list(iter_lexicographic(4))
    for position in range(math.factorial(4)):
        assert tuple(unrank(4, position)) == full[position]
    with pytest.raises(ValueError):
        unrank(3, 6)


def test_iter_lexicographic_ranges():
    """A rank window yields exactly that slice of the full order"""
    full = list(iter_lexicographic(4))
    assert len(full) == 24 and full[0] == (1, 2, 3, 4) and full[-1] == (4, 3, 2, 1)
    assert list(iter_lexicographic(4, 5, 11)) == full[5:11]
    assert list(iter_lexicographic(4, 7, 7)) == []


def test_split_ranges_cover_everything():
    """Ranges are contiguous, near equal and never more than the total"""
    assert split_ranges(10, 3) == [(0, 4), (4, 7), (7, 10)]
    assert split_ranges(2, 5) == [(0, 1), (1, 2)]
    assert split_ranges(7, 1) == [(0, 7)]


# sampling

def test_shard_streams_are_reproducible():
    """Same (seed, shard) draws the same numbers; another shard does not"""
    first = shard_rng(7, 3).random(5)
    assert np.array_equal(first, shard_rng(7, 3).random(5))
    assert not np.array_equal(first, shard_rng(7, 4).random(5))


def test_hypothesis_tuples_hold(rng):
    """Rejection sampling only returns rows with the hypothesis flag"""
    rows = hypothesis_tuples(rng, 5, 200)
    assert rows.shape == (200, 5)
    assert batch_hypothesis(rows).all()


@pytest.mark.parametrize("n, count, lo, hi", [(10, 4096, 1e-3, 2.0), (12, 10_000, math.exp(-1), 10.0)])
def test_hypothesis_tuples_low_acceptance(n, count, lo, hi):
    """Long sorted rows are rarely accepted; the sampler still fills the request"""
    rows = hypothesis_tuples(shard_rng(1, 0), n, count, lo, hi)
    assert rows.shape == (count, n)
    assert batch_hypothesis(rows).all()


def test_hypothesis_fail_tuples_fail(rng):
    """The parameterized sampler returns sorted rows where the flag is false"""
    rows = hypothesis_fail_tuples(rng, 4, 300, 1e-3, 2.0)
    assert rows.shape == (300, 4)
    assert np.all(np.diff(rows, axis=1) >= 0)
    assert not batch_hypothesis(rows).any()
    assert rows.min() >= 1e-3 and rows.max() <= 2.0


def test_unreachable_region(rng):
    """With lo >= 1 no tuple can fail the hypothesis"""
    with pytest.raises(ConfigurationError) as excinfo:
        hypothesis_fail_tuples(rng, 3, 10, 1.5, 3.0)
    assert excinfo.value.context["region"] == "hypothesis_fail"
    assert excinfo.value.context["accepted"] == 0


def test_lemma_region_samplers(rng):
    """Points land in the regions of the two phi lemmas"""
    x, y, z = phi_nested_points(rng, 500).T
    assert np.all((0 < x) & (x <= z) & (z <= y) & (y < 1))
    x, y, z = phi_above_one_points(rng, 500).T
    assert np.all((y >= 1) & (x > 0) & (x <= y) & (z > 0) & (z <= y))
    pairs = open_unit_pairs(rng, 500)
    assert np.all((0 < pairs[:, 0]) & (pairs[:, 0] < pairs[:, 1]) & (pairs[:, 1] < 1))


def test_random_permutation(rng):
    """Permutations are 1-based"""
    assert sorted(random_permutation(rng, 6)) == [1, 2, 3, 4, 5, 6]


# precision

def test_high_precision_hand_margin():
    """The recheck sees the hand counterexample as a violation of C_lower <= C"""
    assert hp_margin("violate_lower_5_01", (0.01, 0.5, 1.0)) == pytest.approx(1.6 - 1.7171067811865475, abs=1e-15)
    assert hp_margin("violate_upper_5", (1.0, 2.0, 3.0)) == pytest.approx(20.0, abs=1e-14)
    assert hp_margin("violate_cater_2", (1.0, 2.0, 3.0)) == pytest.approx(12.0 - 2.0, abs=1e-14)


def test_high_precision_constants():
    """mpmath values of e^(-1/e) and the epsilon residual"""
    assert hp_exp_neg_exp_inv() == pytest.approx(0.6922006275553464, abs=1e-15)
    assert abs(hp_epsilon_residual(0.5173446105249118)) > 1e-12
    assert abs(hp_epsilon_residual(0.5173446105467453)) < 1e-13


# quadrature

def test_quadrature_smooth_integrands():
    """cos on [0, pi/2] and a cubic integrate to their exact values"""
    result = adaptive_gauss_legendre(np.cos, 0.0, math.pi / 2, tol=1e-12)
    assert result.value == pytest.approx(1.0, abs=1e-12)
    cubic = adaptive_gauss_legendre(lambda t: t ** 3, 0.0, 2.0)
    assert cubic.value == pytest.approx(4.0, abs=1e-13)
    assert cubic.panels == 1


def test_quadrature_kink_needs_panels():
    """A kink forces bisection and is still integrated to tolerance"""
    result = adaptive_gauss_legendre(lambda t: np.abs(t - 0.3), 0.0, 1.0, tol=1e-10)
    assert result.value == pytest.approx(0.29, abs=1e-9)
    assert result.panels > 1


def test_quadrature_budget_exhausted():
    """Running out of panels is a quadrature error carrying the estimate"""
    with pytest.raises(QuadratureError) as excinfo:
        adaptive_gauss_legendre(lambda t: np.abs(t - 0.3), 0.0, 1.0, tol=1e-14, panel_budget=1)
    assert excinfo.value.exit_code == 5
    assert excinfo.value.estimate == pytest.approx(panel(lambda t: np.abs(t - 0.3), 0.0, 1.0)[0])
    with pytest.raises(QuadratureError):
        adaptive_gauss_legendre(np.cos, 1.0, 1.0)


def test_quadrature_large_integrand_converges():
    """Panel errors at rounding level of a huge integral count as converged"""
    result = adaptive_gauss_legendre(lambda t: np.exp(2.5 * t * np.exp(2.5 * t)), 0.0, 1.0, tol=1e-10)
    assert math.isfinite(result.value) and result.value > 1e10
    assert result.panels < 10_000
    assert result.error <= 1e-14 * result.value


def test_quadrature_budget_costs_one_panel_pair_per_step():
    """An unresolved oscillation runs to the budget with four rule evaluations per bisection"""
    calls = []

    def oscillating(t):
        calls.append(1)
        return np.cos(2e4 * t)

    with pytest.raises(QuadratureError) as excinfo:
        adaptive_gauss_legendre(oscillating, 0.0, 1.0, tol=1e-12, panel_budget=2_000)
    assert excinfo.value.context["panels"] == 2_000
    assert len(calls) == 2 + 4 * (2_000 - 1)
    assert math.isfinite(excinfo.value.estimate)


# config and reports

def test_band_width_and_validation():
    """Width is the larger of the absolute and the scaled relative tolerance"""
    assert DEFAULT_BAND.width(0.0, 0.0) == 1e-12
    assert Band(0.0, 1e-3).width(10.0, -20.0) == pytest.approx(0.02)
    assert IDENTITY_BAND.width(1.0, 1.0, scale=100.0) == pytest.approx(1e-11)
    with pytest.raises(ConfigurationError):
        Band(-1.0, 0.0)


def test_settings_from_env(monkeypatch):
    """Environment values feed the settings and flags override them"""
    monkeypatch.setenv("CATERLAB_WORKERS", "3")
    monkeypatch.setenv("CATERLAB_ABS_TOL", "1e-9")
    settings = Settings.from_env()
    assert settings.workers == 3 and settings.band.abs_tol == 1e-9
    overridden = settings.with_overrides(rel_tol=1e-6, workers=1)
    assert overridden.workers == 1 and overridden.band.rel_tol == 1e-6 and overridden.band.abs_tol == 1e-9


@pytest.mark.parametrize("name, value", [("CATERLAB_WORKERS", "many"), ("CATERLAB_WORKERS", "0"), ("CATERLAB_REL_TOL", "-1")])
def test_settings_reject_bad_env(monkeypatch, name, value):
    """Unparseable or invalid environment values are configuration errors"""
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigurationError):
        Settings.from_env()


def test_configure_logging_installs_one_handler():
    """Repeated calls do not stack handlers"""
    configure_logging(False)
    configure_logging(True)
    handlers = [h for h in logging.getLogger("caterlab").handlers if getattr(h, "_caterlab", False)]
    assert len(handlers) == 1
    assert logging.getLogger("caterlab").level == logging.DEBUG
    configure_logging(False)


@pytest.mark.parametrize(
    "lhs, relation, rhs, verdict",
    [(2.0, "ge", 1.0, HOLDS), (1.0, "ge", 2.0, VIOLATED), (1.0, "le", 1.0 + 1e-15, EQUALITY), (3.0, "lt", 2.0, VIOLATED)],
)
def test_make_report_verdicts(lhs, relation, rhs, verdict):
    """The margin sign follows the relation"""
    assert make_report("claim", lhs, relation, rhs, {}).verdict == verdict


def test_equality_notes():
    """Unpredicted equality is noteworthy; a predicted one that is missed is a contradiction"""
    surprise = make_report("claim", 1.0, "ge", 1.0, {"x": 1}, expected_equality=False)
    assert surprise.verdict == EQUALITY and surprise.note.startswith("noteworthy")
    assert require(surprise) is surprise
    missed = make_report("claim", 2.0, "ge", 1.0, {"x": 1}, expected_equality=True)
    with pytest.raises(ContradictionError) as excinfo:
        require(missed)
    assert excinfo.value.evidence is missed


def test_unproved_report_never_raises():
    """Informational reports survive a violated verdict"""
    report = make_report("claim", 1.0, "ge", 2.0, {}, proved=False)
    assert require(report).verdict == VIOLATED


def test_inputs_digest_is_stable():
    """Key order does not change the digest"""
    assert inputs_digest({"a": 1, "b": [1.5, 2]}) == inputs_digest({"b": (1.5, 2), "a": 1})
    assert len(inputs_digest({})) == 16


def test_tally_classifies_batches():
    """Batch classification uses the same band rule as single reports"""
    margins = np.array([1.0, 0.0, -1.0])
    result = tally("t", margins, np.ones(3), np.ones(3), np.arange(3.0), seed=5)
    assert (result.holds, result.equality, result.violated) == (1, 1, 1)
    assert result.worst_margin == -1.0 and result.worst_inputs == [2.0]
    assert not result.ok


def test_documents_serialize():
    """Documents carry the manifest and keep shortest float reprs"""
    manifest = RunManifest(command="eval", config={"which": "C"}, seed=1)
    text = dumps(build_document(manifest, {"value": 0.1, "pair": (1, 2)}))
    assert '"value": 0.1' in text and '"command": "eval"' in text
    stream = io.StringIO()
    write_csv([{"n": 10, "gap": 0.1, "tuple": [1.0, 2.0]}], ["n", "gap", "tuple"], stream)
    assert stream.getvalue() == "n,gap,tuple\n10,0.1,1.0 2.0\n"
    stream = io.StringIO()
    write_csv([{"n": 10}], ["n"], stream, manifest=manifest)
    first, *rest = stream.getvalue().splitlines()
    assert first == "# manifest: " + dumps(manifest.to_dict(), indent=None)
    assert rest == ["n", "10"]
