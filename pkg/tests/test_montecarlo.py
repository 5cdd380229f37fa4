import numpy as np
import pytest
from scipy.stats import binom, chisquare

from mixlab.montecarlo import (ImplicitTreeWalker, StopAtEscape, StopAtLevel, mc_hitting, workers_from_env)


def test_gadget_matches_geometric_law():
    # a single edge with holding 1/2: the hitting time is Geometric(1/2), mean 2
    r = mc_hitting(ImplicitTreeWalker(depth=1, branching=1), StopAtLevel(1), 20000, seed=1, workers=1)
    assert abs(r.mean - 2.0) <= 3 * r.stderr
    lo, hi = r.ci95
    assert lo < r.mean < hi
    freq = np.bincount(r.times, minlength=6)[1:6] / r.times.size
    np.testing.assert_allclose(freq, 0.5 ** np.arange(1, 6), atol=0.01)


def test_seed_determinism():
    w = ImplicitTreeWalker(depth=6, stretch_left=2)
    a = mc_hitting(w, StopAtLevel(4), 5000, seed=11, workers=1)
    b = mc_hitting(w, StopAtLevel(4), 5000, seed=11, workers=1)
    assert a.times.tobytes() == b.times.tobytes()
    assert a.left_count.tobytes() == b.left_count.tobytes()
    c = mc_hitting(w, StopAtLevel(4), 5000, seed=12, workers=1)
    assert a.times.tobytes() != c.times.tobytes()


def test_worker_count_does_not_change_results():
    w = ImplicitTreeWalker(depth=5)
    a = mc_hitting(w, StopAtLevel(3), 9000, seed=4, workers=1)
    b = mc_hitting(w, StopAtLevel(3), 9000, seed=4, workers=2)
    assert a.times.tobytes() == b.times.tobytes()


def test_crossing_left_count_is_binomial():
    k = 8
    r = mc_hitting(ImplicitTreeWalker(depth=20, stretch_left=2, stretch_other=2), StopAtLevel(k), 40000,
                   seed=7, workers=1)
    obs = np.bincount(r.left_count, minlength=k + 1)
    exp = binom.pmf(np.arange(k + 1), k, 0.5) * r.left_count.size
    assert chisquare(obs, exp).pvalue > 1e-3


def test_biased_edges_shift_left_count():
    r = mc_hitting(ImplicitTreeWalker(depth=12, left_weight=1.21, bias_max_level=11), StopAtLevel(10), 20000,
                   seed=3, workers=1)
    # far from the leaves each crossing turns left with probability close to 1.1/2.1
    assert abs(r.left_count.mean() / 10 - 1.1 / 2.1) < 0.02


def test_escape_stop_rule():
    stop = StopAtEscape(block=2, cutoff=0, first=2, last=3)
    cum = np.zeros((3, 7), dtype=np.int32)
    cum[1, 3:] = 1            # one left step inside block 2
    level = np.array([4, 4, 6])
    out = stop(level, cum, np.arange(3))
    assert out.tolist() == [True, False, True]
    assert not stop(np.array([2]), cum, np.array([0]))[0]


def test_cap_flag():
    r = mc_hitting(ImplicitTreeWalker(depth=30), StopAtLevel(30), 200, seed=0, max_steps=50, workers=1)
    assert r.cap_warning and r.capped.all()
    assert np.all(r.times == 50)


def test_workers_from_env(monkeypatch):
    monkeypatch.setenv("MIXLAB_WORKERS", "3")
    assert workers_from_env() == 3
    monkeypatch.setenv("MIXLAB_WORKERS", "lots")
    with pytest.raises(ValueError, match="MIXLAB_WORKERS"):
        workers_from_env()
    monkeypatch.delenv("MIXLAB_WORKERS")
    assert workers_from_env() >= 1


def test_walker_validation():
    with pytest.raises(ValueError):
        ImplicitTreeWalker(depth=0)
    with pytest.raises(ValueError):
        ImplicitTreeWalker(depth=3, holding=1.0)
    with pytest.raises(ValueError):
        mc_hitting(ImplicitTreeWalker(depth=2), StopAtLevel(1), 1, seed=0)
