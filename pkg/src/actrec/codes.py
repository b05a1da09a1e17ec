"""Canonical codes and probability arithmetic shared by every stage.

Two four-character codes describe a subject's situation during one
0.33 s instance:

* LAP -- location (x, y on an 8x8 grid, 0 = unknown), facing angle as a
  60-degree sextant, and posture.
* BHO -- the object each hand interacts with (0 = idle), rendered as
  right*100 + left, zero padded.

Observations arrive as candidate sets: several (code, probability)
pairs per instance whose mass may sum to less than one; the remainder
is unallocated open-world belief.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import ConstraintViolation, MalformedCode

# Tolerance absorbing floating-point drift in mass constraints.
MASS_EPS = 1e-9

# Candidate sets are pruned to this many entries, dropping mass <= floor.
PRUNE_CAP = 3
PRUNE_FLOOR = 0.01

NULL_CODE = "0000"

TRAINING_RUNS = frozenset({1, 2, 3, 9})
TEST_RUNS = frozenset({4, 5})

GRID_SIZE = 8          # room is an 8x8 grid; cell coordinates 1..8, 0 = unknown
SEXTANTS = 6           # sextant s covers [60*s, 60*s + 60) degrees
OBJECT_COUNT = 24      # 23 environmental objects plus idle (0)


class Posture(enum.IntEnum):
    NULL = 0
    STAND = 1
    WALK = 2
    SIT = 3
    LIE = 4


class Activity(enum.IntEnum):
    """High-level activities; 0 is the null/idle class."""

    NULL = 0
    RELAX = 101
    COFFEE = 102
    MORNING = 103
    CLEANUP = 104
    SANDWICH = 105


# The five real activities, in canonical ascending-code order.
ACTIVITIES = (
    Activity.RELAX,
    Activity.COFFEE,
    Activity.MORNING,
    Activity.CLEANUP,
    Activity.SANDWICH,
)

ACTIVITY_NAMES = {
    Activity.NULL: "null",
    Activity.RELAX: "relaxing",
    Activity.COFFEE: "coffee time",
    Activity.MORNING: "early morning",
    Activity.CLEANUP: "cleanup",
    Activity.SANDWICH: "sandwich time",
}


class PropertyKind(str, enum.Enum):
    """The two observed candidate channels."""

    LAP = "LAP"
    BHO = "BHO"


@dataclass(frozen=True)
class SerialCode:
    """One recorded session: subject digit 1-9, run digit.

    Runs 1-3 are training sessions, 9 is the drill (also training),
    4-5 are test sessions.
    """

    subject: int
    run: int

    _VALID_RUNS = frozenset({1, 2, 3, 4, 5, 9})

    def __post_init__(self):
        if not 1 <= self.subject <= 9:
            raise MalformedCode(f"subject {self.subject} out of range 1-9")
        if self.run not in self._VALID_RUNS:
            raise MalformedCode(f"run {self.run} not in {{1,2,3,4,5,9}}")

    @property
    def is_training(self) -> bool:
        return self.run in TRAINING_RUNS

    @property
    def is_test(self) -> bool:
        return self.run in TEST_RUNS

    def render(self) -> str:
        return f"{self.subject}{self.run}"

    @classmethod
    def parse(cls, s: str) -> "SerialCode":
        if len(s) != 2 or not s.isdigit():
            raise MalformedCode(f"serial code must be two digits, got {s!r}")
        return cls(int(s[0]), int(s[1]))


@dataclass(frozen=True)
class LapCode:
    """Location / angle / posture.

    ``x`` and ``y`` use 0 for unknown; ``angle_sextant`` uses None,
    since digit 0 is the first (0-59.9 degree) sextant. Only the
    whole-code render "0000" means a fully unknown observation.
    """

    x: int
    y: int
    angle_sextant: int | None
    posture: Posture

    def __post_init__(self):
        if not 0 <= self.x <= GRID_SIZE:
            raise MalformedCode(f"x={self.x} out of range 0-{GRID_SIZE}")
        if not 0 <= self.y <= GRID_SIZE:
            raise MalformedCode(f"y={self.y} out of range 0-{GRID_SIZE}")
        if self.angle_sextant is not None and not 0 <= self.angle_sextant < SEXTANTS:
            raise MalformedCode(f"sextant {self.angle_sextant} out of range 0-5")
        if not isinstance(self.posture, Posture):
            try:
                object.__setattr__(self, "posture", Posture(self.posture))
            except ValueError as exc:
                raise MalformedCode(str(exc)) from None

    @classmethod
    def unknown(cls) -> "LapCode":
        return cls(0, 0, None, Posture.NULL)

    @property
    def is_unknown(self) -> bool:
        return self == LapCode.unknown()


def encode_lap(code: LapCode) -> str:
    """Render a LapCode as its canonical four-digit string."""
    if code.is_unknown:
        return NULL_CODE
    angle = code.angle_sextant if code.angle_sextant is not None else 0
    return f"{code.x}{code.y}{angle}{int(code.posture)}"


def decode_lap(s: str) -> LapCode:
    """Parse a four-digit LAP render; inverse of :func:`encode_lap`."""
    if len(s) != 4 or not s.isdigit():
        raise MalformedCode(f"LAP code must be four digits, got {s!r}")
    if s == NULL_CODE:
        return LapCode.unknown()
    x, y, angle, posture = (int(c) for c in s)
    if x > GRID_SIZE:
        raise MalformedCode(f"LAP x digit {x} out of range in {s!r}")
    if y > GRID_SIZE:
        raise MalformedCode(f"LAP y digit {y} out of range in {s!r}")
    if angle >= SEXTANTS:
        raise MalformedCode(f"LAP angle digit {angle} out of range in {s!r}")
    if posture > max(Posture):
        raise MalformedCode(f"LAP posture digit {posture} out of range in {s!r}")
    return LapCode(x, y, angle, Posture(posture))


@dataclass(frozen=True)
class BhoCode:
    """Both-hands object interaction: right and left object ids, 0 = idle."""

    right: int
    left: int

    def __post_init__(self):
        if not 0 <= self.right < OBJECT_COUNT:
            raise MalformedCode(f"right object {self.right} out of range 0-23")
        if not 0 <= self.left < OBJECT_COUNT:
            raise MalformedCode(f"left object {self.left} out of range 0-23")


def encode_bho(code: BhoCode) -> str:
    """Render as right*100 + left, zero-padded to four digits."""
    return f"{code.right * 100 + code.left:04d}"


def decode_bho(s: str) -> BhoCode:
    if len(s) != 4 or not s.isdigit():
        raise MalformedCode(f"BHO code must be four digits, got {s!r}")
    right, left = int(s[:2]), int(s[2:])
    if right >= OBJECT_COUNT or left >= OBJECT_COUNT:
        raise MalformedCode(f"BHO object id out of range 0-23 in {s!r}")
    return BhoCode(right, left)


def check_probability(p: float, what: str = "probability") -> float:
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise ConstraintViolation(f"{what} {p!r} outside [0, 1]")
    return float(p)


def joint_bho_probability(p_right: float, p_left: float) -> float:
    """Joint probability of two independent per-hand interactions."""
    return check_probability(p_right, "right-hand probability") * check_probability(
        p_left, "left-hand probability"
    )


@dataclass(frozen=True)
class CandidateSet:
    """Pruned per-instance, per-property bag of (code, probability).

    Candidates are sorted by descending probability (ties by ascending
    code render); ``open_world`` is the unallocated remainder.
    """

    instance: int
    prop: PropertyKind
    candidates: tuple[tuple[str, float], ...]
    open_world: float = field(default=0.0)

    def __post_init__(self):
        mass = sum(p for _, p in self.candidates)
        if mass > 1.0 + MASS_EPS:
            raise ConstraintViolation(
                f"candidate mass {mass} exceeds 1 for instance {self.instance}",
                [((self.instance, self.prop.value), mass)],
            )
        codes = [c for c, _ in self.candidates]
        if len(set(codes)) != len(codes):
            raise ConstraintViolation(f"duplicate codes in instance {self.instance}")
        object.__setattr__(self, "open_world", max(0.0, 1.0 - mass))

    @property
    def top(self) -> tuple[str, float] | None:
        return self.candidates[0] if self.candidates else None


def prune_candidates(
    instance: int,
    prop: PropertyKind,
    raw: list[tuple[str, float]],
    cap: int = PRUNE_CAP,
    floor: float = PRUNE_FLOOR,
) -> CandidateSet:
    """Drop entries with mass <= floor, keep the top ``cap`` by probability.

    Ties are broken by ascending code render so builds are deterministic.
    Raises ConstraintViolation when the raw mass already exceeds one.
    """
    mass = sum(p for _, p in raw)
    if mass > 1.0 + MASS_EPS:
        raise ConstraintViolation(
            f"raw candidate mass {mass} exceeds 1 for instance {instance}",
            [((instance, prop.value), mass)],
        )
    kept = [(code, p) for code, p in raw if p > floor]
    kept.sort(key=lambda cp: (-cp[1], cp[0]))
    return CandidateSet(instance, prop, tuple(kept[:cap]))
