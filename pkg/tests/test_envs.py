import numpy as np
import pytest

from hprs.envs import GridDriveEnv, PointMassEnv, bundled_mdps, data_path, make_env
from hprs.envs.base import FiniteMDP, parse_config
from hprs.episode import rollout
from hprs.errors import ConfigError, InvalidAction, NonStochasticRow

GRID = data_path("envs", "griddrive.cfg")


def test_reset_is_deterministic_and_starts_at_zero_progress():
    env = make_env("grid")
    assert env.reset(3) == env.reset(3)
    assert env.reset(0)["L"] == 0.0


def test_pointmass_reset_within_boxes(point_task):
    env = make_env("pointmass")
    for seed in range(100):
        s = env.reset(seed)
        assert s == env.reset(seed)
        for d in point_task.decls:
            assert d.lo <= s[d.name] <= d.hi


def test_pointmass_fixed_point():
    env = make_env("pointmass")
    s0 = env.reset(1)
    s1 = env.step(4)  # (0, 0)
    assert PointMassEnv.actions[4] == (0.0, 0.0)
    assert (s1["x"], s1["y"]) == (s0["x"], s0["y"])


def test_accelerate_saturates():
    env = GridDriveEnv(["#########", "#S.....1#", "#########"], slip=0.0)
    env.reset(0)
    env.step("brake")
    assert env.step("accelerate")["v"] == 1
    assert env.step("accelerate")["v"] == 2
    assert env.step("accelerate")["v"] == 2


def test_invalid_actions():
    env = make_env("grid")
    env.reset(0)
    for a in (-1, 5, 1.5, "fly", None):
        with pytest.raises(InvalidAction):
            env.step(a)
    p = make_env("pointmass")
    p.reset(0)
    with pytest.raises(InvalidAction):
        p.step(9)
    with pytest.raises(InvalidAction):
        p.step((np.nan, 0))


def test_progress_is_monotone_along_route():
    env = make_env("grid")
    prog = [env.progress[c] for c in env.route]
    assert prog[0] == 0.0 and prog[-1] == 1.0
    assert all(b >= a for a, b in zip(prog, prog[1:]))
    assert all(env.progress[c] < 1 for c in env.free if c != env.goal)


def test_matrix_rows_and_sizes():
    for mdp in bundled_mdps():
        assert mdp.n_states <= 100
        assert np.allclose(mdp.P.sum(axis=2), 1.0, atol=1e-9, rtol=0)
        assert mdp.terminal.sum() == 2


def test_monte_carlo_matches_matrix():
    env = GridDriveEnv.from_config(data_path("envs", "zigzag.cfg"))
    mdp = env.transition_matrix()
    n = 100_000
    rng = np.random.default_rng(0)
    env.reset(0)
    s0 = env.state_id
    for a in range(env.n_actions):
        counts = np.zeros(mdp.n_states)
        env._rng = rng
        for _ in range(n):
            env._state = (env.start, env.start_heading, 0, "ok")
            env.step(a)
            counts[env.state_id] += 1
        p = mdp.P[s0, a]
        sd = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) <= 3 * sd + 1e-9)


def test_sampled_states_match_features():
    env = make_env("grid")
    rng = np.random.default_rng(1)
    for seed in range(30):
        s = env.reset(seed)
        assert s == env.features(env.state_id)
        for _ in range(env.horizon):
            s = env.step(int(rng.integers(5)))
            sid = env.state_id
            if sid == env.crash_id:
                assert s["d_walls"] == -1.0
                break
            assert s == env.features(sid)
            if sid == env.goal_id:
                break


def test_traces_load_without_unknown_variables(grid_task, point_task):
    from hprs.trace import sigma_task
    g = make_env("grid")
    sigma_task(grid_task, rollout(g, lambda s: 0, grid_task, g.horizon, 0))
    p = make_env("pointmass")
    sigma_task(point_task, rollout(p, lambda s: 4, point_task, p.horizon, 0))


def test_config_errors():
    with pytest.raises(ConfigError):
        GridDriveEnv(["#S1"])
    with pytest.raises(ConfigError):
        GridDriveEnv(["####", "#S.#", "####"])
    with pytest.raises(ConfigError):
        GridDriveEnv.from_config(text="slip = 2\nlayout:\n###\n#S1\n###\n")
    with pytest.raises(ConfigError):
        GridDriveEnv.from_config(text="colour = red\nlayout:\n####\n#S1#\n####\n")
    with pytest.raises(ConfigError):
        parse_config("just words")
    with pytest.raises(ConfigError):
        make_env("boat")


def test_finite_mdp_validation():
    P = np.array([[[0.5, 0.6]], [[0.0, 1.0]]])
    with pytest.raises(NonStochasticRow):
        FiniteMDP(P, [1, 0], 5, [{}, {}])
