import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from questforge import combat
from questforge.combat import (
    CharacterState,
    GearError,
    GearSet,
    damage_per_turn,
    effective_stats,
    player_base_stats,
    simulate,
)
from questforge.stats import StatVector


def sv(hp=0, attack=(0, 0, 0, 0), amp=(0, 0, 0, 0), resist=(0, 0, 0, 0)):
    return StatVector(hp=hp, attack=tuple(attack), dmg_amp=tuple(amp),
                      resist=tuple(resist))


# ---------------------------------------------------------------------------
# damage formula


def test_zero_attack_zero_damage():
    assert damage_per_turn(sv(hp=10), sv(hp=10)) == 0


def test_damage_passthrough():
    attacker = sv(hp=1, attack=(10, 0, 0, 0))
    assert damage_per_turn(attacker, sv(hp=1)) == 10


def test_damage_amp_and_resist():
    # floor(10 * 1.5 * 0.8) = 12
    attacker = sv(hp=1, attack=(10, 0, 0, 0), amp=(50, 0, 0, 0))
    defender = sv(hp=1, resist=(20, 0, 0, 0))
    assert damage_per_turn(attacker, defender) == 12


def test_damage_terms_clamped_at_zero():
    attacker = sv(hp=1, attack=(10, 5, 0, 0))
    defender = sv(hp=1, resist=(100, 0, 0, 0))
    # fire term is fully resisted; earth term passes
    assert damage_per_turn(attacker, defender) == 5


def test_damage_integer_exactness():
    # float evaluation of 10*1.1*0.9 gives 9.899999... ; integer math gives 9
    attacker = sv(hp=1, attack=(10, 0, 0, 0), amp=(10, 0, 0, 0))
    defender = sv(hp=1, resist=(10, 0, 0, 0))
    assert damage_per_turn(attacker, defender) == (10 * 110 * 90) // 10000 == 9


# ---------------------------------------------------------------------------
# simulate


def test_simulate_hand_trace():
    # player 20 dmg vs monster 60 hp dealing 10 vs player 100 hp:
    # player strikes on turns 1,3,5 and wins on turn 5 having taken 20
    player = sv(hp=100, attack=(20, 0, 0, 0))
    monster = sv(hp=60, attack=(0, 10, 0, 0))
    outcome = simulate(player, monster)
    assert outcome.player_won and outcome.turns == 5 and not outcome.capped
    monster_turns = [t for t in outcome.turn_log if t.actor == "monster"]
    assert len(monster_turns) == 2
    assert monster_turns[-1].defender_hp == 80


def test_simulate_zero_damage_caps_as_loss():
    player = sv(hp=100)
    monster = sv(hp=100)
    outcome = simulate(player, monster)
    assert outcome.winner == "monster" and outcome.capped and outcome.turns == 50


def test_simulate_mirror_match_first_mover_wins():
    stats = sv(hp=50, attack=(10, 10, 10, 10))
    assert simulate(stats, stats).player_won


def test_simulate_requires_positive_hp():
    with pytest.raises(ValueError):
        simulate(sv(hp=0, attack=(1, 0, 0, 0)), sv(hp=10))


def test_hp_nonincreasing_in_log():
    player = sv(hp=90, attack=(7, 0, 0, 0))
    monster = sv(hp=50, attack=(0, 0, 11, 0))
    outcome = simulate(player, monster)
    for actor in ("player", "monster"):
        hps = [t.defender_hp for t in outcome.turn_log if t.actor != actor]
        assert hps == sorted(hps, reverse=True)


# ---------------------------------------------------------------------------
# independent oracle: a from-scratch turn loop, deliberately naive


def _oracle_player_wins(player: StatVector, monster: StatVector) -> bool:
    def dmg(a, d):
        total = 0
        for e in range(4):
            term = a.attack[e] * (100 + a.dmg_amp[e]) * (100 - d.resist[e])
            total += max(0, term) // 10000 if term > 0 else 0
        return total

    hp_p, hp_m = player.hp, monster.hp
    for turn in range(1, 51):
        if turn % 2:
            hp_m -= dmg(player, monster)
            if hp_m <= 0:
                return True
        else:
            hp_p -= dmg(monster, player)
            if hp_p <= 0:
                return False
    return False


def _random_stats(rng) -> StatVector:
    return StatVector(
        hp=int(rng.integers(1, 500)),
        attack=tuple(int(x) for x in rng.integers(0, 80, 4)),
        dmg_amp=tuple(int(x) for x in rng.integers(0, 60, 4)),
        resist=tuple(int(x) for x in rng.integers(-100, 101, 4)),
    )


def test_simulate_agrees_with_oracle_on_1000_random_pairs():
    rng = np.random.default_rng(20240817)
    for _ in range(1000):
        a, b = _random_stats(rng), _random_stats(rng)
        expected = _oracle_player_wins(a, b)
        assert simulate(a, b).player_won == expected
        assert combat.player_wins(a, b) == expected


def test_batch_kernel_agrees_with_simulate():
    rng = np.random.default_rng(7)
    monster = _random_stats(rng)
    rows = [_random_stats(rng) for _ in range(256)]
    batch = combat.wins_batch(np.asarray([r.flat() for r in rows], dtype=np.int64), monster)
    single = [simulate(r, monster).player_won for r in rows]
    assert batch.tolist() == single


def test_pure_and_compiled_backends_agree():
    from questforge import _turnloop_py

    rng = np.random.default_rng(99)
    for _ in range(300):
        a, b = _random_stats(rng), _random_stats(rng)
        pure = _turnloop_py.player_wins(a.flat(), b.flat(), 50)
        assert combat.player_wins(a, b) == pure


def test_closed_form_matches_turn_loop():
    rng = np.random.default_rng(314)
    for _ in range(1000):
        a, b = _random_stats(rng), _random_stats(rng)
        assert combat.wins_closed_form(a.flat(), b.flat()) == simulate(a, b).player_won


# ---------------------------------------------------------------------------
# effective stats / gear


def test_effective_stats_empty_gear(toy_world):
    char = CharacterState(level=1, base_stats=player_base_stats(1))
    assert effective_stats(char, GearSet()) == player_base_stats(1)


def test_effective_stats_single_weapon(toy_world):
    char = CharacterState(level=1, base_stats=player_base_stats(1))
    gear = GearSet.from_ids(toy_world, ["sword"])
    eff = effective_stats(char, gear)
    assert eff.attack == (20, 0, 0, 0)
    assert eff.hp == player_base_stats(1).hp


def test_effective_stats_componentwise_sum():
    ring_a = StatVector(resist=(0, 0, 5, 0))
    base = StatVector(hp=100, resist=(0, 0, 10, 0))
    total = base + ring_a + ring_a
    assert total.resist == (0, 0, 20, 0)


def test_gearset_slot_capacity(toy_world):
    with pytest.raises(GearError):
        GearSet.from_ids(toy_world, ["sword", "club"])  # two weapons
    with pytest.raises(GearError):
        GearSet.from_ids(toy_world, ["ore"])  # material


def test_gear_level_requirement(toy_world):
    char = CharacterState(level=1, base_stats=player_base_stats(1))
    gear = GearSet.from_ids(toy_world, ["ring"])  # level 3 ring
    with pytest.raises(GearError):
        effective_stats(char, gear)


def test_player_base_stats_formula():
    assert player_base_stats(1).hp == 110
    assert player_base_stats(25).hp == 350
    assert player_base_stats(3).attack == (0, 0, 0, 0)


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 300), st.integers(0, 300), st.integers(1, 400), st.integers(1, 400))
def test_simulate_deterministic(a_attack, b_attack, a_hp, b_hp):
    a = sv(hp=a_hp, attack=(a_attack, 0, 0, 0))
    b = sv(hp=b_hp, attack=(0, b_attack, 0, 0))
    first = simulate(a, b)
    second = simulate(a, b)
    assert first == second


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 60), st.integers(0, 60), st.integers(0, 40))
def test_win_monotone_in_extra_nonnegative_gear(base_attack, extra_attack, extra_hp):
    monster = sv(hp=300, attack=(0, 0, 18, 0))
    small = sv(hp=150, attack=(base_attack, 0, 0, 0))
    big = small + sv(hp=extra_hp, attack=(extra_attack, 0, 0, 0))
    if simulate(small, monster).player_won:
        assert simulate(big, monster).player_won
