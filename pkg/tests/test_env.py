import numpy as np
import pytest

from micromarl.config import EnvConfig
from micromarl.env import BattleEnv, EnvContractError
from micromarl.scenarios import ScenarioConfig, load_scenario
from micromarl.scripted import HeuristicFocusFire, UniformRandomValid


def duel_scenario(ally="marine", enemy="marine", ax=(10.0, 16.0), ex=(24.0, 16.0),
                  **kwargs):
    cfg = ScenarioConfig(name="duel", ally_units=[(ally, ax)],
                         enemy_units=[(enemy, ex)], episode_limit=60,
                         spawn_jitter=0.0, **kwargs)
    cfg.validate()
    return cfg


def teleport(env, uid, x, y):
    env.world.units[uid].pos = np.array([float(x), float(y)])
    env._refresh_caches()


def kill(env, uid):
    u = env.world.units[uid]
    u.health = 0.0
    u.shield = 0.0
    u.alive = False
    env._refresh_caches()


# ---------------------------------------------------------------------------
# reset / meta

def test_reset_gives_full_masks_and_determinism():
    env = BattleEnv("3m")
    obs1, state1 = env.reset(seed=5)
    avail = env.avail_all()
    assert avail[:, 1].all()            # stop available
    assert avail[:, 2:6].all()          # all moves walkable at spawn
    assert not avail[:, 0].any()        # alive agents cannot no-op
    obs2, state2 = BattleEnv("3m").reset(seed=5)
    assert np.array_equal(obs1, obs2) and np.array_equal(state1, state2)


def test_obs_length_formula_3m():
    env = BattleEnv("3m")
    # own(2 + 1 type) + 3 enemies * 7 + 2 allies * 7 + id one-hot
    assert env.obs_size == 3 + 3 * 7 + 2 * 7 + 3 == 41
    obs, _ = env.reset(seed=0)
    assert obs.shape == (3, 41)


def test_obs_hand_oracle_two_unit_world():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 1, 14.0, 19.0)  # dx=4, dy=3, dist=5 from (10,16)
    obs = env.build_obs(0)
    # own: health 1, shield 0, type one-hot [1]
    expected = [1.0, 0.0, 1.0,
                1.0, 5.0 / 9.0, 4.0 / 9.0, 3.0 / 9.0, 1.0, 0.0, 1.0,
                1.0]  # agent id
    assert obs.tolist() == pytest.approx(expected)


def test_sight_boundary_inclusive_at_exact_distance():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 1, 19.0, 16.0)  # distance exactly 9
    obs = env.build_obs(0)
    assert obs[3] == 1.0 and obs[4] == 1.0  # visible, distance feature 1.0
    teleport(env, 1, 19.01, 16.0)
    obs = env.build_obs(0)
    assert obs[3] == 0.0 and obs[4] == 0.0  # out of sight: slot all zero


def test_dead_units_indistinguishable_from_distant():
    env = BattleEnv("3m")
    env.reset(seed=2)
    far = env.build_obs(0).copy()
    # teleport everyone else out of sight
    teleport(env, 1, 28, 28)
    teleport(env, 2, 28, 30)
    teleport(env, 3, 28, 26)
    teleport(env, 4, 30, 28)
    teleport(env, 5, 30, 30)
    far = env.build_obs(0).copy()
    env2 = BattleEnv("3m")
    env2.reset(seed=2)
    for uid in (1, 2, 3, 4, 5):
        kill(env2, uid)
    dead = env2.build_obs(0)
    assert np.array_equal(far, dead)
    own_and_id = 3 + 3
    assert np.count_nonzero(far) <= own_and_id


def test_decentralisation_outside_sight_range():
    env1 = BattleEnv("3m")
    env1.reset(seed=3)
    env2 = BattleEnv("3m")
    env2.reset(seed=3)
    # move an out-of-sight enemy differently in the two worlds
    teleport(env1, 5, 28.0, 29.0)
    teleport(env2, 5, 25.0, 24.0)
    d1 = float(np.hypot(*(env1.world.units[5].pos - env1.world.units[0].pos)))
    d2 = float(np.hypot(*(env2.world.units[5].pos - env2.world.units[0].pos)))
    assert min(d1, d2) > env1.cfg.sight_range
    assert np.array_equal(env1.build_obs(0), env2.build_obs(0))


def test_dead_agent_obs_zero_except_id():
    env = BattleEnv("3m")
    env.reset(seed=4)
    kill(env, 1)
    obs = env.build_obs(1)
    assert obs[-3:].tolist() == [0.0, 1.0, 0.0]
    assert np.count_nonzero(obs[:-3]) == 0


# ---------------------------------------------------------------------------
# availability

def test_attack_mask_at_shoot_boundary():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 1, 16.0, 16.0)  # distance 6.0
    assert env.avail_actions(0)[6]
    teleport(env, 1, 16.01, 16.0)
    assert not env.avail_actions(0)[6]
    teleport(env, 1, 17.0, 16.0)  # distance 7: visible but unattackable
    assert env.build_obs(0)[3] == 1.0
    assert not env.avail_actions(0)[6]


def test_dead_agent_mask_noop_only():
    env = BattleEnv("3m")
    env.reset(seed=1)
    kill(env, 0)
    mask = env.avail_actions(0)
    assert mask[0] and not mask[1:].any()


def test_cooldown_masks_attack():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 1, 14.0, 16.0)
    assert env.avail_actions(0)[6]
    env.world.units[0].cooldown_remaining = 1
    env._refresh_caches()
    assert not env.avail_actions(0)[6]


def test_medivac_heal_mask():
    scenario = ScenarioConfig(
        name="heal", ally_units=[("medivac", (10.0, 16.0)), ("marine", (11.0, 16.0))],
        enemy_units=[("marine", (24.0, 16.0)), ("marine", (24.0, 18.0))],
        episode_limit=60)
    scenario.validate()
    env = BattleEnv(scenario)
    env.reset(seed=1)
    mask = env.avail_actions(0)
    assert not mask[6] and not mask[7]  # self-heal masked; marine unhurt
    env.world.units[1].health = 20.0
    env._refresh_caches()
    mask = env.avail_actions(0)
    assert not mask[6] and mask[7]  # wounded teammate in range
    env.world.units[0].energy = 0.0
    env._refresh_caches()
    assert not env.avail_actions(0)[7]  # no energy
    env.world.units[0].energy = 50.0
    teleport(env, 1, 20.0, 16.0)  # move the patient out of heal range
    assert not env.avail_actions(0)[7]


def test_move_mask_blocked_by_wall():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 0, 1.5, 16.0)
    mask = env.avail_actions(0)
    assert not mask[5]  # west into the border
    assert mask[4]      # east fine


# ---------------------------------------------------------------------------
# step contract

def test_step_rejects_unavailable_action():
    env = BattleEnv("3m")
    env.reset(seed=1)
    with pytest.raises(EnvContractError, match="agent 0: action 0"):
        env.step([0, 1, 1])


def test_dead_agent_must_pass_noop():
    env = BattleEnv("3m")
    env.reset(seed=1)
    kill(env, 0)
    with pytest.raises(EnvContractError, match="agent 0: action 3"):
        env.step([3, 1, 1])
    obs, state, res = env.step([0, 1, 1])  # fine
    assert not res.terminated or res.terminated


def test_termination_at_episode_limit_is_defeat():
    scenario = duel_scenario(ax=(5.0, 16.0), ex=(27.0, 16.0))
    scenario.episode_limit = 3
    env = BattleEnv(scenario)
    env.reset(seed=1)
    for _ in range(3):
        _, _, res = env.step([1])
        if res.terminated:
            break
    assert res.terminated and not res.info["battle_won"]
    assert env.world.t == 3
    with pytest.raises(EnvContractError):
        env.step([1])


def test_win_when_all_enemies_dead():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    env.world.units[1].health = 5.0
    teleport(env, 1, 14.0, 16.0)
    _, _, res = env.step([6])
    assert res.terminated and res.info["battle_won"]
    assert res.info["dead_enemies"] == 1


# ---------------------------------------------------------------------------
# rewards

def test_shaped_reward_step_formula():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    env.world.units[1].health = 5.0
    teleport(env, 1, 14.0, 16.0)
    _, _, res = env.step([6])
    scale = 20.0 / (45.0 + 10.0 + 200.0)
    assert res.reward == pytest.approx((5.0 + 10.0 + 200.0) * scale)


def test_shaped_reward_no_win_step():
    scenario = ScenarioConfig(
        name="two", ally_units=[("marine", (10.0, 16.0))],
        enemy_units=[("marine", (24.0, 16.0)), ("marine", (24.0, 18.0))],
        episode_limit=60)
    scenario.validate()
    env = BattleEnv(scenario)
    env.reset(seed=1)
    env.world.units[1].health = 6.0
    teleport(env, 1, 14.0, 16.0)
    _, _, res = env.step([6])  # 6 damage, 1 kill, battle continues
    scale = 20.0 / (90.0 + 20.0 + 200.0)
    assert res.reward == pytest.approx((6.0 + 10.0) * scale)
    assert not res.terminated


def test_sparse_mode_terminal_rewards():
    scenario = duel_scenario()
    scenario.env.reward_mode = "sparse"
    env = BattleEnv(scenario)
    env.reset(seed=1)
    env.world.units[1].health = 5.0
    teleport(env, 1, 14.0, 16.0)
    _, _, res = env.step([6])
    assert res.reward == 1.0 and res.info["battle_won"]

    scenario2 = duel_scenario()
    scenario2.env.reward_mode = "sparse"
    scenario2.episode_limit = 2
    env2 = BattleEnv(scenario2)
    env2.reset(seed=1)
    _, _, r1 = env2.step([1])
    assert r1.reward == 0.0
    _, _, r2 = env2.step([1])
    assert r2.terminated and r2.reward == -1.0


def test_won_episode_returns_exactly_20_without_regen():
    env = BattleEnv("3m")
    heuristic = HeuristicFocusFire()
    won_checked = 0
    for seed in range(6):
        env.reset(seed=seed)
        heuristic.reset()
        total = 0.0
        done = False
        while not done:
            _, _, res = env.step(heuristic.step(env, env.avail_all()))
            total += res.reward
            done = res.terminated
        if res.info["battle_won"]:
            assert total == pytest.approx(20.0, abs=1e-9)
            won_checked += 1
    assert won_checked > 0


# ---------------------------------------------------------------------------
# state vector

def test_state_hand_oracle():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 0, 16.0, 16.0)   # map centre
    teleport(env, 1, 24.0, 8.0)
    state = env.build_state()
    # ally: cx=cy=16 -> (0,0), health 1, shield 0, cooldown 0, type [1]
    assert state[:6].tolist() == [0.0, 0.0, 1.0, 0.0, 0.0, 1.0]
    # enemy: (24-16)/16=0.5, (8-16)/16=-0.5, health 1, shield 0, type [1]
    assert state[6:11].tolist() == [0.5, -0.5, 1.0, 0.0, 1.0]
    # last actions: fresh reset -> no-op one-hot
    last = state[11:]
    assert last[0] == 1.0 and np.count_nonzero(last) == 1


def test_state_tracks_last_actions_and_cooldown():
    env = BattleEnv(duel_scenario())
    env.reset(seed=1)
    teleport(env, 1, 14.0, 16.0)
    _, state, _ = env.step([6])
    # marine fired: cooldown 2 set then decremented once -> 1/2
    assert state[4] == pytest.approx(0.5)
    assert state[11 + 6] == 1.0  # last action one-hot at attack slot


def test_healer_state_slot_uses_energy():
    scenario = ScenarioConfig(
        name="heal", ally_units=[("medivac", (10.0, 16.0))],
        enemy_units=[("marine", (24.0, 16.0))], episode_limit=60)
    scenario.validate()
    env = BattleEnv(scenario)
    env.reset(seed=1)
    state = env.build_state()
    assert state[4] == pytest.approx(1.0)  # full energy


# ---------------------------------------------------------------------------
# invariants

def test_normalisation_bounds_random_rollouts():
    env = BattleEnv("2s3z")
    rng = np.random.default_rng(0)
    pol = UniformRandomValid()
    for seed in range(3):
        obs, state = env.reset(seed=seed)
        done = False
        while not done:
            assert np.all(obs >= -1.0) and np.all(obs <= 1.0)
            assert np.all(state >= -1.0) and np.all(state <= 1.0)
            obs, state, res = env.step(pol.step(env, env.avail_all(), rng))
            done = res.terminated


def test_mask_soundness_quick_fuzz():
    env = BattleEnv("2s3z")
    rng = np.random.default_rng(1)
    pol = UniformRandomValid()
    steps = 0
    seed = 0
    while steps < 1500:
        env.reset(seed=seed)
        seed += 1
        done = False
        while not done and steps < 1500:
            avail = env.avail_all()
            assert avail.any(axis=1).all()  # at least one action each
            _, _, res = env.step(pol.step(env, avail, rng))
            steps += 1
            done = res.terminated
