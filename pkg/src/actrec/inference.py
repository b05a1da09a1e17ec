"""Per-instance high-level activity scoring.

Each instance carries up to three BHO and three LAP candidates. Every
pairing of one BHO candidate with one LAP candidate (plus one-sided
pairings where the other channel is absent) forms an item. Per item
and activity, each channel contributes its candidate probability times
the matching axiom probability, and the two channels are fused with a
weighted noisy-OR:

    T_a = 1 - (1 - m_a * B_a) * (1 - n_a * L_a)

The instance's score for an activity is the maximum T_a over its
items; the winner is the top-scoring activity, or the null activity
when no item carries any mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .axioms import AxiomTable
from .codes import ACTIVITIES, Activity, CandidateSet, PropertyKind, check_probability
from .relstore import ProbRelation, Schema

PREDICTION_SCHEMA = Schema.of(
    ("instance_id", "integer"),
    ("serial", "text"),
    ("t_start", "real"),
    ("winner", "integer"),
    *[(f"score{int(a)}", "real") for a in ACTIVITIES],
)

# Channel weights tuned per activity; BHO side m, LAP side n.
DEFAULT_WEIGHTS_M = {101: 0.7, 102: 0.5, 103: 0.5, 104: 0.7, 105: 0.5}
DEFAULT_WEIGHTS_N = {101: 0.7, 102: 0.7, 103: 0.4, 104: 0.9, 105: 0.6}


@dataclass(frozen=True)
class FusionWeights:
    m: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS_M))
    n: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS_N))

    def __post_init__(self):
        object.__setattr__(self, "m", {int(a): float(self.m[int(a)]) for a in ACTIVITIES})
        object.__setattr__(self, "n", {int(a): float(self.n[int(a)]) for a in ACTIVITIES})
        for w in (*self.m.values(), *self.n.values()):
            check_probability(w, "fusion weight")

    @classmethod
    def uniform(cls, w: float = 1.0) -> "FusionWeights":
        return cls({int(a): w for a in ACTIVITIES}, {int(a): w for a in ACTIVITIES})


@dataclass(frozen=True)
class ItemScore:
    """One (BHO candidate x LAP candidate) item; either side may be absent."""

    instance: int
    bho: tuple[str, float] | None
    lap: tuple[str, float] | None
    L: tuple[float, ...]
    B: tuple[float, ...]
    T: tuple[float, ...]


@dataclass(frozen=True)
class InstancePrediction:
    instance: int
    ranked: tuple[tuple[int, float], ...]  # (activity, score), descending
    winner: int


def fuse(p_bho: float, p_lap: float, m_a: float, n_a: float) -> float:
    """Weighted noisy-OR of two independent evidence channels."""
    return 1.0 - (1.0 - m_a * p_bho) * (1.0 - n_a * p_lap)


def score_instance(
    bho: CandidateSet | None,
    lap: CandidateSet | None,
    bho_axioms: AxiomTable,
    lap_axioms: AxiomTable,
    weights: FusionWeights,
    strict_pairs: bool = False,
) -> list[ItemScore]:
    """Enumerate and score the instance's items.

    By default each channel also pairs against an absent other side,
    giving up to 3x3 + 3 + 3 = 15 items; ``strict_pairs``
    restricts to the pure Cartesian product. Codes with no axiom row
    contribute zero evidence.
    """
    bho_cands = list(bho.candidates) if bho else []
    lap_cands = list(lap.candidates) if lap else []
    instance = bho.instance if bho else (lap.instance if lap else -1)

    bho_side: list[tuple[str, float] | None] = list(bho_cands)
    lap_side: list[tuple[str, float] | None] = list(lap_cands)
    if not strict_pairs:
        bho_side.append(None)
        lap_side.append(None)

    m, n = weights.m, weights.n
    items: list[ItemScore] = []
    for bc in bho_side:
        b_vec = _evidence(bc, bho_axioms)
        for lc in lap_side:
            if bc is None and lc is None:
                continue
            l_vec = _evidence(lc, lap_axioms)
            t_vec = tuple(
                fuse(b, l, m[int(a)], n[int(a)])
                for b, l, a in zip(b_vec, l_vec, ACTIVITIES)
            )
            items.append(ItemScore(instance, bc, lc, l_vec, b_vec, t_vec))
    return items


def _evidence(cand: tuple[str, float] | None, axioms: AxiomTable) -> tuple[float, ...]:
    if cand is None:
        return (0.0,) * len(ACTIVITIES)
    code, p = cand
    row = axioms.get(code)
    if row is None:
        return (0.0,) * len(ACTIVITIES)
    return tuple(p * row.probs[int(a)] for a in ACTIVITIES)


def predict_instance(items: list[ItemScore], instance: int | None = None) -> InstancePrediction:
    """Max item score per activity, ranked descending (ties by code)."""
    if instance is None:
        instance = items[0].instance if items else -1
    scores = {int(a): 0.0 for a in ACTIVITIES}
    for item in items:
        for a, t in zip(ACTIVITIES, item.T):
            if t > scores[int(a)]:
                scores[int(a)] = t
    ranked = tuple(
        sorted(scores.items(), key=lambda at: (-at[1], at[0]))
    )
    winner = ranked[0][0] if ranked[0][1] > 0.0 else int(Activity.NULL)
    return InstancePrediction(instance, ranked, winner)


def ranked_activities(pred: InstancePrediction, k: int = 3) -> list[int]:
    """Top-k activities with positive score; [null] when there are none."""
    top = [a for a, s in pred.ranked[:k] if s > 0.0]
    return top if top else [int(Activity.NULL)]


def predict_all(
    candidates: ProbRelation,
    bho_axioms: AxiomTable,
    lap_axioms: AxiomTable,
    weights: FusionWeights,
    spine: Iterable[tuple[int, str, float]],
    strict_pairs: bool = False,
) -> ProbRelation:
    """One prediction row per spine instance, in instance order."""
    idx = candidates.schema.index_of
    i_id, i_prop = idx("instance_id"), idx("property")
    i_code, i_p = idx("code"), idx("p")
    by_instance: dict[int, dict[str, list[tuple[str, float]]]] = {}
    for row in candidates.rows():
        by_instance.setdefault(row[i_id], {}).setdefault(row[i_prop], []).append(
            (row[i_code], row[i_p])
        )

    out_rows = []
    for inst, serial, t in sorted(spine):
        chans = by_instance.get(inst, {})
        bho = _as_candidate_set(inst, PropertyKind.BHO, chans.get("BHO"))
        lap = _as_candidate_set(inst, PropertyKind.LAP, chans.get("LAP"))
        items = score_instance(
            bho, lap, bho_axioms, lap_axioms, weights, strict_pairs
        )
        pred = predict_instance(items, inst)
        scores = dict(pred.ranked)
        out_rows.append(
            (inst, serial, t, pred.winner, *[scores[int(a)] for a in ACTIVITIES])
        )

    rel = ProbRelation("predictions", PREDICTION_SCHEMA)
    rel.insert_rows(out_rows)
    return rel


def _as_candidate_set(
    inst: int, prop: PropertyKind, cands: list[tuple[str, float]] | None
) -> CandidateSet | None:
    if not cands:
        return None
    ordered = sorted(cands, key=lambda cp: (-cp[1], cp[0]))
    return CandidateSet(inst, prop, tuple(ordered))
