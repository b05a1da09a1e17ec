"""Noisy-OR fusion, item enumeration, and instance prediction."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from actrec.axioms import AxiomRow, AxiomTable
from actrec.codes import ACTIVITIES, CandidateSet, PropertyKind
from actrec.inference import (
    FusionWeights,
    fuse,
    predict_all,
    predict_instance,
    ranked_activities,
    score_instance,
)
from actrec.relstore import ProbRelation
from actrec.smoothing import CANDIDATE_KEY, CANDIDATE_SCHEMA

unit = st.floats(0, 1, allow_nan=False)


def table(prop, rows):
    return AxiomTable(
        prop,
        {code: AxiomRow(code, probs) for code, probs in rows.items()},
        training_size=100,
    )


EMPTY_BHO = table(PropertyKind.BHO, {})
EMPTY_LAP = table(PropertyKind.LAP, {})


class TestFuse:
    def test_unweighted_half_half(self):
        assert fuse(0.5, 0.5, 1.0, 1.0) == 0.75

    def test_absent_lap_side(self):
        assert fuse(0.4, 0.0, 0.7, 0.9) == pytest.approx(0.7 * 0.4, abs=1e-15)

    def test_cleanup_weights_saturated(self):
        assert fuse(1.0, 1.0, 0.7, 0.9) == pytest.approx(0.97, abs=1e-15)

    @given(p=unit, q=unit, m=unit, n=unit)
    def test_symmetry(self, p, q, m, n):
        assert fuse(p, q, m, n) == pytest.approx(fuse(q, p, n, m), abs=1e-12)

    @given(p=unit, q=unit, m=unit, n=unit, delta=unit)
    def test_monotone_in_each_argument(self, p, q, m, n, delta):
        hi = min(1.0, p + delta)
        assert fuse(hi, q, m, n) >= fuse(p, q, m, n) - 1e-12
        hi = min(1.0, q + delta)
        assert fuse(p, hi, m, n) >= fuse(p, q, m, n) - 1e-12
        hi = min(1.0, m + delta)
        assert fuse(p, q, hi, n) >= fuse(p, q, m, n) - 1e-12

    @given(p=unit, q=unit, m=unit, n=unit)
    def test_bounds(self, p, q, m, n):
        t = fuse(p, q, m, n)
        assert -1e-12 <= t <= 1.0 + 1e-12
        assert t >= max(m * p, n * q) - 1e-12
        assert fuse(0, 0, m, n) == 0.0


class TestScoreInstance:
    def test_single_bho_item(self):
        bho = CandidateSet(7, PropertyKind.BHO, (("2000", 1.0),))
        bho_ax = table(PropertyKind.BHO, {"2000": {101: 0.2}})
        items = score_instance(bho, None, bho_ax, EMPTY_LAP, FusionWeights())
        assert len(items) == 1
        t = dict(zip((int(a) for a in ACTIVITIES), items[0].T))
        assert t[101] == pytest.approx(0.7 * 0.2, abs=1e-15)
        assert all(v == 0.0 for a, v in t.items() if a != 101)

    def test_item_count_with_absent_sides(self):
        bho = CandidateSet(
            1, PropertyKind.BHO, (("0100", 0.5), ("0200", 0.3), ("0300", 0.1))
        )
        lap = CandidateSet(
            1, PropertyKind.LAP, (("1102", 0.5), ("2202", 0.3), ("3302", 0.1))
        )
        items = score_instance(bho, lap, EMPTY_BHO, EMPTY_LAP, FusionWeights())
        assert len(items) == 15  # 9 paired + 3 BHO-only + 3 LAP-only
        strict = score_instance(
            bho, lap, EMPTY_BHO, EMPTY_LAP, FusionWeights(), strict_pairs=True
        )
        assert len(strict) == 9

    def test_empty_candidates_yield_no_items(self):
        assert score_instance(None, None, EMPTY_BHO, EMPTY_LAP, FusionWeights()) == []

    def test_missing_axiom_row_contributes_zero(self):
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 0.9),))
        items = score_instance(bho, None, EMPTY_BHO, EMPTY_LAP, FusionWeights())
        assert all(t == 0.0 for t in items[0].T)

    def test_evidence_multiplies_candidate_and_axiom(self):
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 0.5),))
        bho_ax = table(PropertyKind.BHO, {"0100": {103: 0.6}})
        items = score_instance(bho, None, bho_ax, EMPTY_LAP, FusionWeights.uniform())
        b = dict(zip((int(a) for a in ACTIVITIES), items[0].B))
        assert b[103] == pytest.approx(0.3, abs=1e-15)


class TestPredictInstance:
    def test_argmax_example(self):
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 1.0),))
        bho_ax = table(PropertyKind.BHO, {"0100": {101: 0.2, 103: 0.6}})
        items = score_instance(bho, None, bho_ax, EMPTY_LAP, FusionWeights())
        pred = predict_instance(items)
        t = dict(pred.ranked)
        assert t[101] == pytest.approx(0.14, abs=1e-15)
        assert t[103] == pytest.approx(0.3, abs=1e-15)
        assert pred.winner == 103

    def test_no_items_predicts_null(self):
        pred = predict_instance([], instance=4)
        assert pred.winner == 0
        assert len(pred.ranked) == 5

    def test_all_zero_scores_predict_null(self):
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 0.9),))
        items = score_instance(bho, None, EMPTY_BHO, EMPTY_LAP, FusionWeights())
        assert predict_instance(items).winner == 0

    def test_max_over_items_per_activity(self):
        # mirrors the reported worked instance: some items carry only
        # BHO evidence, some add LAP; the per-activity max wins overall
        bho_ax = table(
            PropertyKind.BHO,
            {
                "0404": {104: 0.3, 105: 0.11},
                "0102": {101: 0.13, 102: 0.09, 103: 0.5, 104: 0.07, 105: 0.13},
            },
        )
        lap_ax = table(PropertyKind.LAP, {"6623": {103: 0.8}})
        bho = CandidateSet(14940, PropertyKind.BHO, (("0404", 0.3), ("0102", 0.6)))
        lap = CandidateSet(14940, PropertyKind.LAP, (("6623", 0.4),))
        items = score_instance(bho, lap, bho_ax, lap_ax, FusionWeights())
        pred = predict_instance(items)
        assert pred.winner == 103
        # six items: 2 BHO x 1 LAP paired, 2 BHO-only, 1 LAP-only
        assert len(items) == 5
        scores = dict(pred.ranked)
        best_103 = max(t for item in items for a, t in zip(ACTIVITIES, item.T) if int(a) == 103)
        assert scores[103] == best_103

    def test_tie_breaks_to_lower_activity_code(self):
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 1.0),))
        bho_ax = table(PropertyKind.BHO, {"0100": {102: 0.4, 104: 0.4}})
        items = score_instance(bho, None, bho_ax, EMPTY_LAP, FusionWeights.uniform())
        pred = predict_instance(items)
        assert pred.winner == 102

    def test_ranked_activities_drops_zero_scores(self):
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 1.0),))
        bho_ax = table(PropertyKind.BHO, {"0100": {103: 0.5}})
        items = score_instance(bho, None, bho_ax, EMPTY_LAP, FusionWeights())
        pred = predict_instance(items)
        assert ranked_activities(pred, 3) == [103]
        assert ranked_activities(predict_instance([], 2)) == [0]


def random_axioms(rng, prop, codes):
    rows = {}
    for code in codes:
        raw = [rng.random() for _ in range(5)]
        scale = rng.random() / max(sum(raw), 1e-9)
        rows[code] = {
            int(a): r * scale for a, r in zip(ACTIVITIES, raw)
        }
    return table(prop, rows)


def oracle_predict(bho_cands, lap_cands, bho_ax, lap_ax, weights):
    """Exhaustive enumeration, structured independently of the engine."""
    bho_opts = list(bho_cands) + [None]
    lap_opts = list(lap_cands) + [None]
    best = {int(a): 0.0 for a in ACTIVITIES}
    for bc in bho_opts:
        for lc in lap_opts:
            if bc is None and lc is None:
                continue
            for a in (int(x) for x in ACTIVITIES):
                b = 0.0
                if bc is not None and bho_ax.get(bc[0]):
                    b = bc[1] * bho_ax.get(bc[0]).probs[a]
                l = 0.0
                if lc is not None and lap_ax.get(lc[0]):
                    l = lc[1] * lap_ax.get(lc[0]).probs[a]
                t = 1 - (1 - weights.m[a] * b) * (1 - weights.n[a] * l)
                best[a] = max(best[a], t)
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    winner = ranked[0][0] if ranked[0][1] > 0 else 0
    return best, winner


class TestPredictAll:
    def make_inputs(self, n_instances=200, seed=5):
        rng = random.Random(seed)
        bho_codes = [f"{i:04d}" for i in range(1, 9)]
        lap_codes = [f"{i}{i}01" for i in range(1, 9)]
        bho_ax = random_axioms(rng, PropertyKind.BHO, bho_codes[: 6])
        lap_ax = random_axioms(rng, PropertyKind.LAP, lap_codes[: 6])
        rows = []
        spine = []
        per_instance = {}
        for i in range(1, n_instances + 1):
            spine.append((i, "14", (i - 1) / 3.0))
            chans = {}
            for prop, codes in (("BHO", bho_codes), ("LAP", lap_codes)):
                k = rng.randrange(0, 4)
                chosen = rng.sample(codes, k)
                probs = [rng.random() for _ in chosen]
                total = sum(probs)
                if total > 0:
                    probs = [p / total * rng.uniform(0.2, 1.0) for p in probs]
                cands = sorted(zip(chosen, probs), key=lambda cp: (-cp[1], cp[0]))
                chans[prop] = cands
                for code, p in cands:
                    rows.append((i, "14", (i - 1) / 3.0, prop, code, p))
            per_instance[i] = chans
        rel = ProbRelation("candidates", CANDIDATE_SCHEMA, CANDIDATE_KEY)
        rel.insert_rows(rows)
        return rel, bho_ax, lap_ax, spine, per_instance

    def test_matches_enumeration_oracle(self):
        rel, bho_ax, lap_ax, spine, per_instance = self.make_inputs()
        weights = FusionWeights()
        preds = predict_all(rel, bho_ax, lap_ax, weights, spine)
        idx = preds.schema.index_of
        assert len(preds) == len(spine)
        for row in preds.rows():
            inst = row[idx("instance_id")]
            chans = per_instance[inst]
            best, winner = oracle_predict(
                chans["BHO"], chans["LAP"], bho_ax, lap_ax, weights
            )
            assert row[idx("winner")] == winner, inst
            for a in (int(x) for x in ACTIVITIES):
                assert row[idx(f"score{a}")] == pytest.approx(best[a], abs=1e-12)

    def test_composition_contract(self):
        rel, bho_ax, lap_ax, spine, per_instance = self.make_inputs(50, seed=8)
        weights = FusionWeights()
        preds = predict_all(rel, bho_ax, lap_ax, weights, spine)
        idx = preds.schema.index_of
        for row in preds.rows():
            inst = row[idx("instance_id")]
            chans = per_instance[inst]
            bho = (
                CandidateSet(inst, PropertyKind.BHO, tuple(chans["BHO"]))
                if chans["BHO"]
                else None
            )
            lap = (
                CandidateSet(inst, PropertyKind.LAP, tuple(chans["LAP"]))
                if chans["LAP"]
                else None
            )
            pred = predict_instance(
                score_instance(bho, lap, bho_ax, lap_ax, weights), inst
            )
            assert row[idx("winner")] == pred.winner

    def test_empty_input(self):
        rel = ProbRelation("candidates", CANDIDATE_SCHEMA, CANDIDATE_KEY)
        preds = predict_all(rel, EMPTY_BHO, EMPTY_LAP, FusionWeights(), [])
        assert len(preds) == 0

    def test_uniform_weights_deterministic_oracle(self):
        # single certain candidates and m = n = 1: the winner is the
        # argmax of 1 - (1-B)(1-L) computed directly
        bho_ax = table(PropertyKind.BHO, {"0100": {101: 0.3, 102: 0.25}})
        lap_ax = table(PropertyKind.LAP, {"1102": {102: 0.3, 101: 0.26}})
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 1.0),))
        lap = CandidateSet(1, PropertyKind.LAP, (("1102", 1.0),))
        items = score_instance(bho, lap, bho_ax, lap_ax, FusionWeights.uniform())
        pred = predict_instance(items)
        direct = {
            a: 1 - (1 - bho_ax.get("0100").probs[a]) * (1 - lap_ax.get("1102").probs[a])
            for a in (int(x) for x in ACTIVITIES)
        }
        assert pred.winner == max(sorted(direct), key=lambda a: direct[a])


class TestScalingBehaviour:
    def test_one_sided_evidence_scaling_preserves_winner(self):
        # with evidence on a single channel, scaling every axiom row by
        # c rescales all scores by the same factor: argmax invariant
        rng = random.Random(4)
        for trial in range(50):
            codes = ["0100", "0200"]
            ax_rows = {}
            for code in codes:
                raw = [rng.random() for _ in range(5)]
                total = sum(raw)
                ax_rows[code] = {int(a): r / total for a, r in zip(ACTIVITIES, raw)}
            c = rng.uniform(0.05, 1.0)
            base = table(PropertyKind.BHO, ax_rows)
            scaled = table(
                PropertyKind.BHO,
                {
                    code: {a: p * c for a, p in probs.items()}
                    for code, probs in ax_rows.items()
                },
            )
            bho = CandidateSet(
                1, PropertyKind.BHO, (("0100", 0.6), ("0200", 0.3))
            )
            w = FusionWeights.uniform(1.0)
            p1 = predict_instance(score_instance(bho, None, base, EMPTY_LAP, w))
            p2 = predict_instance(score_instance(bho, None, scaled, EMPTY_LAP, w))
            assert p1.winner == p2.winner

    def test_two_sided_scaling_counterexample(self):
        # documented spec defect: with both channels active the noisy-OR
        # cross term breaks argmax invariance under shared scaling
        bho_ax = {"0100": {101: 0.35, 102: 0.6}}
        lap_ax = {"1102": {101: 0.35, 102: 0.05}}
        bho = CandidateSet(1, PropertyKind.BHO, (("0100", 1.0),))
        lap = CandidateSet(1, PropertyKind.LAP, (("1102", 1.0),))
        w = FusionWeights.uniform(1.0)

        def winner_at(c):
            b = table(
                PropertyKind.BHO,
                {k: {a: p * c for a, p in v.items()} for k, v in bho_ax.items()},
            )
            l = table(
                PropertyKind.LAP,
                {k: {a: p * c for a, p in v.items()} for k, v in lap_ax.items()},
            )
            return predict_instance(score_instance(bho, lap, b, l, w)).winner

        assert winner_at(1.0) == 102
        assert winner_at(0.3) == 101
