# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled combat turn loop.

Gear search evaluates hundreds of thousands of candidate stat aggregates per
monster; this kernel runs the exact same alternating turn loop as the pure
interpreter over flat 13-int stat rows (hp, attack[4], dmg_amp[4], resist[4]).
"""


cdef inline long long _dmg(const long long * att, const long long * dfn) noexcept nogil:
    cdef long long total = 0
    cdef long long term
    cdef int e
    for e in range(4):
        term = att[1 + e] * (100 + att[5 + e]) * (100 - dfn[9 + e])
        if term > 0:
            total += term // 10000
    return total


cdef inline bint _player_wins(const long long * p, const long long * m, int turn_cap) noexcept nogil:
    cdef long long dmg_p = _dmg(p, m)
    cdef long long dmg_m = _dmg(m, p)
    cdef long long hp_p = p[0]
    cdef long long hp_m = m[0]
    cdef int turn
    for turn in range(1, turn_cap + 1):
        if turn % 2 == 1:
            hp_m -= dmg_p
            if hp_m <= 0:
                return 1
        else:
            hp_p -= dmg_m
            if hp_p <= 0:
                return 0
    return 0  # cap reached: monster wins


def damage_per_turn(long long[::1] attacker, long long[::1] defender):
    return _dmg(&attacker[0], &defender[0])


def player_wins(long long[::1] player, long long[::1] monster, int turn_cap):
    return bool(_player_wins(&player[0], &monster[0], turn_cap))


def wins_batch(long long[:, ::1] players, long long[::1] monster, int turn_cap,
               unsigned char[::1] out):
    """Fill out[i] with 1 where row i beats the monster."""
    cdef Py_ssize_t i
    cdef Py_ssize_t n = players.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _player_wins(&players[i, 0], &monster[0], turn_cap)
