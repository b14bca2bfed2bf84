"""Stat vectors: the numeric substrate shared by characters, monsters and gear."""
from __future__ import annotations

from dataclasses import dataclass, field

ELEMENTS = ("fire", "earth", "water", "air")

_ZERO4 = (0, 0, 0, 0)


@dataclass(frozen=True)
class StatVector:
    """Hit points plus per-element attack, damage amplification and resistance.

    Amplification and resistance are integer percents. Addition is
    componentwise, so the effect of a gear set is just the sum of its
    item vectors on top of the character's base vector.
    """

    hp: int = 0
    attack: tuple[int, int, int, int] = field(default=_ZERO4)
    dmg_amp: tuple[int, int, int, int] = field(default=_ZERO4)
    resist: tuple[int, int, int, int] = field(default=_ZERO4)

    def __add__(self, other: "StatVector") -> "StatVector":
        return StatVector(
            hp=self.hp + other.hp,
            attack=tuple(a + b for a, b in zip(self.attack, other.attack)),
            dmg_amp=tuple(a + b for a, b in zip(self.dmg_amp, other.dmg_amp)),
            resist=tuple(a + b for a, b in zip(self.resist, other.resist)),
        )

    def flat(self) -> tuple[int, ...]:
        """13-int layout: hp, attack[4], dmg_amp[4], resist[4]."""
        return (self.hp, *self.attack, *self.dmg_amp, *self.resist)

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.flat())

    def dominates(self, other: "StatVector") -> bool:
        """Componentwise >= on every channel."""
        return all(a >= b for a, b in zip(self.flat(), other.flat()))

    def to_json(self) -> dict:
        return {
            "hp": self.hp,
            "attack": dict(zip(ELEMENTS, self.attack)),
            "dmg_amp": dict(zip(ELEMENTS, self.dmg_amp)),
            "resist": dict(zip(ELEMENTS, self.resist)),
        }

    @classmethod
    def from_json(cls, data: dict) -> "StatVector":
        def vec(name: str) -> tuple[int, int, int, int]:
            raw = data.get(name, {})
            return tuple(int(raw.get(e, 0)) for e in ELEMENTS)

        return cls(
            hp=int(data.get("hp", 0)),
            attack=vec("attack"),
            dmg_amp=vec("dmg_amp"),
            resist=vec("resist"),
        )

    @classmethod
    def from_flat(cls, values) -> "StatVector":
        v = tuple(int(x) for x in values)
        if len(v) != 13:
            raise ValueError(f"expected 13 stat components, got {len(v)}")
        return cls(hp=v[0], attack=v[1:5], dmg_amp=v[5:9], resist=v[9:13])


ZERO_STATS = StatVector()
