"""Probabilistic mode operator and windowed candidate smoothing."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actrec.codes import PropertyKind
from actrec.errors import InvalidConfig
from actrec.relstore import ProbRelation
from actrec.smoothing import (
    CANDIDATE_KEY,
    CANDIDATE_SCHEMA,
    SmoothingConfig,
    probabilistic_mode,
    smooth_candidates,
)


class TestProbabilisticMode:
    def test_identical_inputs_fixpoint(self):
        dist = {"sit": 0.6, "stand": 0.3}
        out = probabilistic_mode([dist] * 4)
        assert out == pytest.approx(dist)

    def test_two_deterministic_inputs(self):
        out = probabilistic_mode([{"s": 1.0}, {"t": 1.0}])
        assert out == {"s": 0.5, "t": 0.5}

    def test_single_argument_identity(self):
        dist = {"sitting": 0.6, "standing": 0.3}
        assert probabilistic_mode([dist]) == dist

    def test_empty_input_rejected(self):
        with pytest.raises(InvalidConfig):
            probabilistic_mode([])

    def test_zero_entries_omitted(self):
        out = probabilistic_mode([{"a": 0.5, "b": 0.0}, {"a": 0.5}])
        assert out == {"a": 0.5}

    def test_no_renormalization(self):
        # masses 0.5 and 0.3 -> mean 0.4, not 1.0
        out = probabilistic_mode([{"a": 0.5}, {"a": 0.3}])
        assert sum(out.values()) == pytest.approx(0.4, abs=1e-15)

    @given(
        st.lists(
            st.dictionaries(
                st.sampled_from("abcdef"),
                st.floats(0.0, 0.3, allow_nan=False),
                max_size=4,
            ),
            min_size=1,
            max_size=11,
        )
    )
    def test_mass_is_mean_of_input_masses(self, dists):
        out = probabilistic_mode(dists)
        expected = sum(sum(d.values()) for d in dists) / len(dists)
        assert sum(out.values()) == pytest.approx(expected, abs=1e-12)

    @given(
        st.lists(st.sampled_from("abc"), min_size=1, max_size=11),
    )
    def test_compatible_with_counting_mode(self, values):
        counts = {v: values.count(v) for v in set(values)}
        top = max(counts.values())
        majority = [v for v, c in counts.items() if c == top]
        if len(majority) != 1:
            return  # no strict majority: argmax tie is unspecified
        out = probabilistic_mode([{v: 1.0} for v in values])
        assert max(out, key=out.get) == majority[0]

    def test_never_invents_values(self):
        out = probabilistic_mode([{"a": 0.4}, {"b": 0.2}, {}])
        assert set(out) <= {"a", "b"}


def candidate_relation(rows):
    rel = ProbRelation("candidates", CANDIDATE_SCHEMA, CANDIDATE_KEY)
    rel.insert_rows(rows)
    return rel


def deterministic_series(codes, prop="LAP", serial="11", start_id=1):
    rows = []
    for i, code in enumerate(codes):
        inst = start_id + i
        rows.append((inst, serial, i / 3.0, prop, code, 1.0))
    return candidate_relation(rows)


def groups_of(rel, prop):
    idx = rel.schema.index_of
    out = {}
    for row in rel.rows():
        if row[idx("property")] == prop:
            out.setdefault(row[idx("instance_id")], {})[row[idx("code")]] = row[
                idx("p")
            ]
    return out


class TestSmoothCandidates:
    def test_outlier_is_voted_down(self):
        rel = deterministic_series(["walk", "walk", "lie", "walk", "walk"])
        out = smooth_candidates(rel, SmoothingConfig(PropertyKind.LAP, 2))
        middle = groups_of(out, "LAP")[3]
        assert middle["walk"] == pytest.approx(0.8, abs=1e-15)
        assert middle["lie"] == pytest.approx(0.2, abs=1e-15)
        assert max(middle, key=middle.get) == "walk"

    def test_window_clipped_at_serial_start(self):
        rel = deterministic_series(["a", "b", "c", "d", "e", "f"])
        out = smooth_candidates(rel, SmoothingConfig(PropertyKind.LAP, 2))
        first = groups_of(out, "LAP")[1]
        # window is instances {1, 2, 3}, n = 3
        assert first == pytest.approx({"a": 1 / 3, "b": 1 / 3, "c": 1 / 3})

    def test_brute_force_window_oracle(self):
        codes = ["a", "a", "b", "a", "c", "c", "b", "a", "a", "b"]
        rel = deterministic_series(codes)
        k = 2
        out = smooth_candidates(rel, SmoothingConfig(PropertyKind.LAP, k))
        got = groups_of(out, "LAP")
        for i in range(len(codes)):
            inst = 1 + i
            lo, hi = max(0, i - k), min(len(codes) - 1, i + k)
            window = codes[lo : hi + 1]
            expected = {
                c: window.count(c) / len(window)
                for c in set(window)
                if window.count(c) / len(window) > 0.01
            }
            expected = dict(
                sorted(expected.items(), key=lambda cp: (-cp[1], cp[0]))[:3]
            )
            assert got[inst] == pytest.approx(expected, abs=1e-12), inst

    def test_identical_series_unchanged(self):
        rel = deterministic_series(["x"] * 9)
        out = smooth_candidates(rel, SmoothingConfig(PropertyKind.LAP, 3))
        for group in groups_of(out, "LAP").values():
            assert group == {"x": 1.0}

    def test_shift_equivariance(self):
        codes = ["a", "b", "a", "a", "c"]
        base = smooth_candidates(
            deterministic_series(codes, start_id=1),
            SmoothingConfig(PropertyKind.LAP, 2),
        )
        shifted = smooth_candidates(
            deterministic_series(codes, start_id=501),
            SmoothingConfig(PropertyKind.LAP, 2),
        )
        got_base = groups_of(base, "LAP")
        got_shifted = groups_of(shifted, "LAP")
        for inst, group in got_base.items():
            assert got_shifted[inst + 500] == pytest.approx(group)

    def test_serials_do_not_mix(self):
        rows = []
        for i in range(3):
            rows.append((1 + i, "11", i / 3.0, "LAP", "a", 1.0))
        for i in range(3):
            rows.append((4 + i, "12", i / 3.0, "LAP", "b", 1.0))
        out = smooth_candidates(
            candidate_relation(rows), SmoothingConfig(PropertyKind.LAP, 2)
        )
        got = groups_of(out, "LAP")
        assert got[3] == {"a": 1.0}
        assert got[4] == {"b": 1.0}

    def test_other_property_passes_through(self):
        rows = [
            (1, "11", 0.0, "LAP", "a", 1.0),
            (1, "11", 0.0, "BHO", "0100", 0.4),
        ]
        out = smooth_candidates(
            candidate_relation(rows), SmoothingConfig(PropertyKind.LAP, 2)
        )
        assert groups_of(out, "BHO")[1] == {"0100": 0.4}

    def test_scope_filter_passes_other_serials(self):
        rows = [
            (1, "11", 0.0, "LAP", "a", 0.5),
            (2, "14", 0.0, "LAP", "b", 0.5),
        ]
        out = smooth_candidates(
            candidate_relation(rows),
            SmoothingConfig(PropertyKind.LAP, 2),
            serials={"14"},
        )
        got = groups_of(out, "LAP")
        assert got[1] == {"a": 0.5}
        assert got[2] == {"b": 0.5}

    def test_spine_restores_dropped_instances(self):
        # instance 2 has no observation; neighbors vote it back in
        rows = [
            (1, "11", 0.0, "LAP", "a", 0.9),
            (3, "11", 2 / 3, "LAP", "a", 0.9),
        ]
        spine = [(1, "11", 0.0), (2, "11", 1 / 3), (3, "11", 2 / 3)]
        out = smooth_candidates(
            candidate_relation(rows),
            SmoothingConfig(PropertyKind.LAP, 1),
            spine=spine,
        )
        got = groups_of(out, "LAP")
        assert got[2]["a"] == pytest.approx(0.6, abs=1e-12)

    def test_renormalize_flag(self):
        rows = [
            (1, "11", 0.0, "LAP", "a", 0.3),
            (1, "11", 0.0, "LAP", "b", 0.2),
        ]
        out = smooth_candidates(
            candidate_relation(rows),
            SmoothingConfig(PropertyKind.LAP, 2, renormalize=True),
        )
        group = groups_of(out, "LAP")[1]
        assert sum(group.values()) == pytest.approx(1.0, abs=1e-12)
        assert group["a"] == pytest.approx(0.6, abs=1e-12)

    def test_output_respects_prune_rules(self):
        rows = []
        for i, code in enumerate("abcdefg"):
            rows.append((1, "11", 0.0, "LAP", code, 1 / 8))
        rel = candidate_relation(rows)
        out = smooth_candidates(rel, SmoothingConfig(PropertyKind.LAP, 2))
        group = groups_of(out, "LAP")[1]
        assert len(group) <= 3
        assert all(p > 0.01 for p in group.values())

    def test_half_width_range(self):
        with pytest.raises(InvalidConfig):
            SmoothingConfig(PropertyKind.LAP, 0)
        with pytest.raises(InvalidConfig):
            SmoothingConfig(PropertyKind.LAP, 11)


@st.composite
def random_streams(draw):
    length = draw(st.integers(1, 24))
    stream = []
    for _ in range(length):
        support = draw(
            st.lists(st.sampled_from("abcde"), unique=True, min_size=0, max_size=3)
        )
        probs = [draw(st.floats(0.05, 0.3, allow_nan=False)) for _ in support]
        stream.append(dict(zip(support, probs)))
    return stream


class TestSmoothProperties:
    @given(random_streams(), st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_matches_window_enumeration_oracle(self, stream, k):
        rows = []
        for i, dist in enumerate(stream):
            for code, p in dist.items():
                rows.append((1 + i, "11", i / 3.0, "LAP", code, p))
        spine = [(1 + i, "11", i / 3.0) for i in range(len(stream))]
        out = smooth_candidates(
            candidate_relation(rows),
            SmoothingConfig(PropertyKind.LAP, k),
            spine=spine,
        )
        got = groups_of(out, "LAP")
        for i in range(len(stream)):
            lo, hi = max(0, i - k), min(len(stream) - 1, i + k)
            window = stream[lo : hi + 1]
            pm = {}
            for dist in window:
                for code, p in dist.items():
                    pm[code] = pm.get(code, 0.0) + p
            pm = {c: v / len(window) for c, v in pm.items() if v > 0}
            kept = sorted(
                [(c, p) for c, p in pm.items() if p > 0.01],
                key=lambda cp: (-cp[1], cp[0]),
            )[:3]
            assert got.get(1 + i, {}) == pytest.approx(dict(kept), abs=1e-12)

    @given(random_streams(), st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_never_invents_codes(self, stream, k):
        rows = []
        for i, dist in enumerate(stream):
            for code, p in dist.items():
                rows.append((1 + i, "11", i / 3.0, "LAP", code, p))
        if not rows:
            return
        out = smooth_candidates(
            candidate_relation(rows), SmoothingConfig(PropertyKind.LAP, k)
        )
        seen = set()
        for dist in stream:
            seen |= set(dist)
        for group in groups_of(out, "LAP").values():
            assert set(group) <= seen
