import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyplab.hyperbolic import all_trees, constants, cycle_graph, farey_ball, path_graph, random_connected
from hyplab.propositions import PROPOSITIONS, Verifier, verify_propositions


def test_eleven_checks():
    assert len(PROPOSITIONS) == 11


def test_record_shape():
    recs = verify_propositions(path_graph(6))
    assert [r.proposition for r in recs] == list(PROPOSITIONS)
    d = recs[0].as_dict()
    assert set(d) >= {"space_id", "proposition", "delta", "checked", "violations", "witness"}


def test_half_on_path():
    rec = verify_propositions(path_graph(11), ["half"])[0]
    assert rec.checked > 0 and rec.passed


def test_npp_on_trees():
    for t in all_trees(7):
        rec = verify_propositions(t, ["npp"])[0]
        assert rec.passed


def test_unknown_proposition():
    with pytest.raises(ValueError):
        verify_propositions(path_graph(3), ["nonsense"])


def _forced(space, delta):
    v = Verifier(space)
    v.delta = delta
    v.K = constants(delta)
    return v


def test_violations_are_detected_with_too_small_delta():
    # on a long cycle nearest points are not unique up to 0: a verifier told
    # delta = 0 must find counterexamples and report a witness
    recs = {r.proposition: r for r in _forced(cycle_graph(10), 0).run(["npp", "projection", "bounded"])}
    assert any(r.violations > 0 for r in recs.values())
    bad = next(r for r in recs.values() if r.violations)
    assert bad.witness is not None


@settings(max_examples=15)
@given(st.integers(4, 14), st.integers(0, 14), st.integers(0, 10**6))
def test_random_graphs_pass(n, extra, seed):
    for rec in verify_propositions(random_connected(n, extra, seed)):
        assert rec.passed, rec.as_dict()


def test_sampled_mode_is_deterministic():
    sp = farey_ball(12)
    assert sp.n > 40
    a = verify_propositions(sp, ["half", "coarse"], samples=5000, seed=3)
    b = verify_propositions(sp, ["half", "coarse"], samples=5000, seed=3)
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]
    assert all(r.mode == "sampled" and r.passed for r in a)
