import numpy as np
import pytest

from hprs.envs import data_path
from hprs.errors import EmptyWindow, WeightDimensionMismatch
from hprs.shaping import (ShapingSession, base_reward, bhnr_reward, bhnr_series, morl_reward, morl_weights,
                          potential, potential_from_scores, potentials, saturated_score, score, score_b,
                          score_c, score_matrix, shape_trace, shaped_reward)
from hprs.spec_lang import parse_spec
from hprs.task import task_from_text
from hprs.trace import load_trace, make_trace, robustness

from conftest import random_state, random_task, random_trace


def enumerated_potential(task, scores):
    """Sum over requirements of r(phi) times the product of r over its predecessors."""
    group = {r.name: r.cls.group for r in task}
    total = 0.0
    for phi in task:
        w = 1.0
        for other in task:
            g1, g2 = group[other.name], group[phi.name]
            if (g1 == "safety" and g2 != "safety") or (g1 == "target" and g2 == "comfort"):
                w *= scores[other.name]
        total += w * scores[phi.name]
    return total


TWO_COMFORT = """
var s in [-1, 1]
var t in [-1, 1]
var c1 in [-1, 1]
var c2 in [-1, 1]
ensure "S": s >= 0
achieve "T": t >= 0
encourage "C1": c1 >= 0
encourage "C2": c2 >= 0
"""


def req(text):
    return parse_spec(text).requirements[0]


# --- scores ----------------------------------------------------------------


def test_score_b_examples():
    r = req('var x in [-1, 1]\nensure "p": x >= 0\n')
    assert score_b(r, {"x": 0.0}) == 1
    assert score_b(r, {"x": -0.3}) == 0
    assert score_b(r, {"x": r.u}) == 1


def test_score_c_examples():
    r = req('var x in [-1, 1]\nencourage "p": x >= 0 bounds [-2, 1]\n')
    assert score_c(r, {"x": 0.4}) == 1.0
    assert score_c(r, {"x": -2.0}) == 0.0
    assert score_c(r, {"x": -1.0}) == 0.5
    assert score_c(r, {"x": -7.0}) == 0.0  # below l saturates


def test_score_c_linear_on_grid():
    for l in (-0.5, -2.0, -6.5):
        f = np.linspace(l, 0, 100)
        c = saturated_score(f, l, 3.0)
        assert np.max(np.abs(c - (1 - f / l))) < 1e-12


def test_scores_live_in_unit_interval(rng, safe_driving):
    env = {"L": rng.uniform(0, 1, 500), "d_walls": rng.uniform(-1, 5, 500),
           "d_center": rng.uniform(0, 2, 500), "v": rng.uniform(0, 10, 500),
           "alpha": rng.uniform(-1, 1, 500), "da": rng.uniform(0, 2.83, 500)}
    S = score_matrix(safe_driving, env)
    assert S.shape == (500, 7)
    assert np.all((S >= 0) & (S <= 1))
    safety_col = safe_driving.names.index("no_collision")
    assert set(np.unique(S[:, safety_col])) <= {0.0, 1.0}


# --- potential -------------------------------------------------------------


def test_potential_all_ones(safe_driving):
    ones = np.ones((1, len(safe_driving)))
    assert potential_from_scores(safe_driving, ones)[0] == len(safe_driving)


def test_potential_safety_gates_everything():
    task = task_from_text(TWO_COMFORT)
    assert potential(task, {"s": -0.5, "t": 1, "c1": 1, "c2": 1}) == 0.0


def test_potential_hand_example():
    task = task_from_text(TWO_COMFORT)
    state = {"s": 0.5, "t": -0.5, "c1": -0.8, "c2": -0.6}
    scores = {r.name: score(r, state) for r in task}
    assert scores == pytest.approx({"S": 1.0, "T": 0.5, "C1": 0.2, "C2": 0.4})
    assert potential(task, state) == pytest.approx(1.8)
    assert enumerated_potential(task, scores) == pytest.approx(1.8)


def test_potential_matches_enumeration(rng):
    for _ in range(300):
        task = random_task(rng)
        s = random_state(rng)
        scores = {r.name: score(r, s) for r in task}
        assert potential(task, s) == pytest.approx(enumerated_potential(task, scores), abs=1e-12)


def test_potential_monotone_in_each_signal():
    task = task_from_text(TWO_COMFORT)
    rng = np.random.default_rng(5)
    for _ in range(500):
        s = {k: rng.uniform(-1, 1) for k in ("s", "t", "c1", "c2")}
        k = rng.choice(list(s))
        bumped = dict(s, **{k: min(1.0, s[k] + rng.uniform(0, 0.5))})
        assert potential(task, bumped) >= potential(task, s) - 1e-12


# --- rewards ---------------------------------------------------------------


def test_base_reward():
    task = task_from_text(TWO_COMFORT)
    assert base_reward(task, {"s": 0, "t": 0.2, "c1": 0, "c2": 0}) == 1
    assert base_reward(task, {"s": 0, "t": -0.2, "c1": 0, "c2": 0}) == 0


def test_conquer_cumulative_base_reward():
    task = task_from_text('var x in [-1, 1]\nensure "ok": x >= -0.9\nconquer "g": x >= 0\n')
    tr = make_trace([{"x": v} for v in (-1, -0.5, 0.1, 0.2, 0.3)])
    rep = shape_trace(task, tr)
    assert rep.base.sum() == 3


def test_shaped_reward_same_state():
    task = task_from_text(TWO_COMFORT)
    s = {"s": 0.1, "t": 0.5, "c1": -0.2, "c2": 0.3}
    step = shaped_reward(task, s, s)
    assert step.shaped == step.base
    zero = shaped_reward(task, s, s, terminal=True)
    assert zero.potential_after == 0.0
    assert shaped_reward(task, s, s, terminal=True, terminal_potential="keep").shaped == step.base


def test_shaping_identity_on_grid_trace(grid_task):
    tr = load_trace(data_path("traces", "griddrive_lap.jsonl"), grid_task.decls)
    rep = shape_trace(grid_task, tr, gamma=1.0, terminal_potential="keep")
    for i, st in enumerate(tr.states[:-1]):
        scores = {r.name: score(r, st) for r in grid_task}
        assert rep.psi_before[i] == pytest.approx(enumerated_potential(grid_task, scores), abs=1e-12)
    assert np.allclose(rep.shaped, rep.base + rep.psi_after - rep.psi_before, atol=1e-12, rtol=0)
    assert rep.psi_after.sum() - rep.psi_before.sum() == pytest.approx(rep.psi[-1] - rep.psi[0], abs=1e-9)


def test_zero_terminal_convention(grid_task):
    tr = load_trace(data_path("traces", "griddrive_crash.jsonl"), grid_task.decls)
    rep = shape_trace(grid_task, tr, gamma=0.99)
    assert rep.psi_after[-1] == 0.0
    assert rep.shaped[-1] == pytest.approx(rep.base[-1] - rep.psi_before[-1])


def test_session_matches_batch(grid_task):
    tr = load_trace(data_path("traces", "griddrive_lap.jsonl"), grid_task.decls)
    rep = shape_trace(grid_task, tr, gamma=0.9)
    sess = ShapingSession(grid_task, gamma=0.9)
    sess.reset(tr.states[0])
    got = [sess.step(s, terminal=(i == len(tr) - 2)).shaped for i, s in enumerate(tr.states[1:])]
    assert np.allclose(got, rep.shaped, atol=1e-12, rtol=0)


def test_telescoping_random(rng):
    for _ in range(200):
        task = random_task(rng)
        tr = random_trace(rng, task)
        psi = potentials(task, tr)
        diffs = sum(psi[t + 1] - psi[t] for t in range(len(tr) - 1))
        assert abs(diffs - (psi[-1] - psi[0])) <= 1e-9


# --- baselines -------------------------------------------------------------


def test_morl_examples():
    task = task_from_text('var a in [-1,1]\nvar b in [-1,1]\nvar c in [-1,1]\n'
                          'ensure "S": a >= 0\nachieve "T": b >= 0\nencourage "C": c >= 0\n')
    assert morl_reward(task, {"a": 1, "b": 1, "c": 1}) == pytest.approx(1.0)
    assert morl_weights(task, "decreasing") == pytest.approx([4 / 7, 2 / 7, 1 / 7])
    assert morl_reward(task, {"a": 1, "b": -1, "c": -1}, "decreasing") == pytest.approx(4 / 7)
    with pytest.raises(WeightDimensionMismatch):
        morl_weights(task, [0.5, 0.2, 0.2])
    with pytest.raises(WeightDimensionMismatch):
        morl_weights(task, [0.5, 0.5])
    with pytest.raises(WeightDimensionMismatch):
        morl_weights(task, [1.5, -0.5, 0.0])


def test_decreasing_weights_split_within_class(safe_driving):
    w = morl_weights(safe_driving, "decreasing")
    by = dict(zip(safe_driving.names, w))
    assert by["no_collision"] == pytest.approx(2 * by["lap"])
    assert by["lap"] == pytest.approx(2 * 5 * by["speed_min"])
    assert w.sum() == pytest.approx(1.0)


def test_bhnr_window_of_one(rng):
    task = random_task(rng)
    s = random_state(rng, 1.0)
    tr = make_trace([s], task.decls)
    assert bhnr_reward(task, tr) == pytest.approx(min(float(r.signal(s)) for r in task))
    with pytest.raises(EmptyWindow):
        bhnr_reward(task, make_trace([]))
    with pytest.raises(EmptyWindow):
        bhnr_series(task, tr, horizon=0)


def test_bhnr_positive_when_satisfied():
    task = task_from_text(TWO_COMFORT)
    tr = make_trace([{"s": 0.5, "t": 0.5, "c1": 0.2, "c2": 0.9}] * 4)
    assert bhnr_reward(task, tr) > 0


def test_bhnr_series_matches_naive_windows(point_task):
    task = point_task
    tr = load_trace(data_path("traces", "pointmass_hprs.jsonl"), task.decls)
    got = bhnr_series(task, tr, horizon=10)
    for t in range(len(tr)):
        lo = max(0, t - 9)
        window = tr.states[lo:t + 1]
        per = []
        for r in task:
            f = [float(r.signal(s)) for s in window]
            if r.cls.keyword == "achieve":
                per.append(max(f))
            elif r.cls.keyword == "conquer":
                per.append(max(min(f[j:]) for j in range(len(f))))
            else:
                per.append(min(f))
        assert got[t] == pytest.approx(min(per), abs=1e-12)


def test_report_rows(grid_task):
    tr = load_trace(data_path("traces", "griddrive_lap.jsonl"), grid_task.decls)
    rows = list(shape_trace(grid_task, tr).rows())
    assert len(rows) == len(tr) - 1
    assert all(r["tltl_final"] is None for r in rows[:-1])
    assert rows[-1]["tltl_final"] == pytest.approx(min(robustness(r, tr) for r in grid_task))
