"""Tests for adversarial verification: neighborhoods, agreed-center
sampling, adversarial trials, witness re-checks, and the equivalence and
length-sweep wrappers."""

import itertools

import numpy as np
import pytest

from rnnverify._util import derive_rng
from rnnverify.automata import (
    NEGATIVE,
    POSITIVE,
    count_strings,
    enumerate_strings,
    tomita_dfa,
)
from rnnverify.metrics import edit_distance
from rnnverify.verification import (
    SamplingExhausted,
    adversarial_accuracy,
    equivalence_check,
    length_sweep,
    local_invariance,
    neighborhood,
    sample_agreed_centers,
    verify_model,
    verify_witness,
)


def all_strings(length):
    return ["".join(bits) for bits in itertools.product("01", repeat=length)]


def blind_spot(oracle, flipped):
    """Classifier that agrees with the oracle except on the given strings."""
    flipped = set(flipped)

    def classify(w):
        label = oracle.classify(w)
        return 1 - label if w in flipped else label

    return classify


class TestNeighborhood:
    def test_radius_one_of_single_symbol(self):
        # 1 flip + 1 deletion + 4 insertions, deduplicated; "11" arises
        # from two distinct insertions, "00" needs two edits and is absent.
        nb = neighborhood("1", 1)
        assert set(nb.members) == {"", "0", "01", "10", "11"}

    def test_members_sorted_by_length_then_lex(self):
        nb = neighborhood("0110", 1)
        keys = [(len(w), w) for w in nb.members]
        assert keys == sorted(keys)
        assert len(set(nb.members)) == len(nb.members)

    @pytest.mark.parametrize("radius", [1, 2])
    def test_matches_brute_force_ball(self, radius):
        centers = ["", "0", "10", "011", "0101", "11011"]
        for x in centers:
            want = set()
            for n in range(max(0, len(x) - radius), len(x) + radius + 1):
                for w in all_strings(n):
                    if w != x and edit_distance(x, w) <= radius:
                        want.add(w)
            assert set(neighborhood(x, radius).members) == want

    def test_every_member_within_radius_and_not_center(self):
        for x in ("1101", "00110"):
            for radius in (1, 2):
                nb = neighborhood(x, radius)
                for w in nb.members:
                    assert 1 <= edit_distance(x, w) <= radius

    def test_all_zeros_size(self):
        # For 0^N the N deletions collapse to one string and the zero
        # insertions to another, leaving 2N + 3 distinct neighbors.
        for n in range(1, 7):
            size = len(neighborhood("0" * n, 1).members)
            assert size == 2 * n + 3
            assert size <= 3 * n + 2

    def test_radius_zero_rejected(self):
        with pytest.raises(ValueError):
            neighborhood("01", 0)

    def test_empty_center(self):
        assert set(neighborhood("", 1).members) == {"0", "1"}


class TestSampleAgreedCenters:
    def test_oracle_as_classifier(self):
        dfa = tomita_dfa(4)
        rng = derive_rng(0, "t")
        out = sample_agreed_centers(dfa, dfa, 9, 25, POSITIVE, rng)
        assert len(out) == 25
        assert all(len(w) == 9 for w in out)
        assert all(dfa.classify(w) == POSITIVE for w in out)

    def test_deterministic(self):
        dfa = tomita_dfa(3)
        a = sample_agreed_centers(dfa, dfa, 12, 30, NEGATIVE, derive_rng(5, "t"))
        b = sample_agreed_centers(dfa, dfa, 12, 30, NEGATIVE, derive_rng(5, "t"))
        assert a == b

    def test_singleton_class_repeats(self):
        # 1* has exactly one positive string per length.
        dfa = tomita_dfa(1)
        out = sample_agreed_centers(dfa, dfa, 10, 8, POSITIVE, derive_rng(0, "t"))
        assert out == ["1" * 10] * 8

    def test_exhausts_on_hopeless_classifier(self):
        dfa = tomita_dfa(1)
        with pytest.raises(SamplingExhausted):
            sample_agreed_centers(
                lambda w: NEGATIVE, dfa, 6, 5, POSITIVE,
                derive_rng(1, "t"), max_attempts=200,
            )


class TestAdversarialAccuracy:
    @pytest.mark.parametrize("gid", range(1, 8))
    def test_oracle_self_verification(self, gid):
        # The oracle never disagrees with itself, so no center can break.
        dfa = tomita_dfa(gid)
        for length in (6, 20):
            for label in (POSITIVE, NEGATIVE):
                if count_strings(dfa, length, label) == 0:
                    continue
                trial = adversarial_accuracy(
                    dfa, dfa, length, 20, 1, label, derive_rng(3, "sv", gid, length)
                )
                assert trial.gamma == 1.0
                assert trial.broken == 0
                assert trial.witnesses == ()

    def test_blind_spot_breaks_only_positive_class(self):
        # The only positive string of length 6 in 1* is 1^6; its same-label
        # radius-1 neighbors are 1^5 and 1^7.  Flipping the classifier on
        # 1^5 breaks every positive center but no negative one, because for
        # negative centers 1^5 always sits across the class boundary.
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, ["11111"])
        pos = adversarial_accuracy(f, dfa, 6, 10, 1, POSITIVE, derive_rng(0, "p"))
        assert pos.gamma == 0.0
        assert pos.broken == pos.total == 10
        assert all(w == ("111111", "11111") for w in pos.witnesses)
        neg = adversarial_accuracy(f, dfa, 6, 40, 1, NEGATIVE, derive_rng(0, "n"))
        assert neg.gamma == 1.0
        assert neg.witnesses == ()

    def test_partial_break_accounting(self):
        # Flipping on "010" removes it from the agreed-center pool and
        # breaks exactly the centers that reach it without leaving the
        # negative class: its three substitution neighbors.
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, ["010"])
        trial = adversarial_accuracy(f, dfa, 3, 60, 1, NEGATIVE, derive_rng(7, "x"))
        assert trial.total == 60
        assert 0 < trial.broken < trial.total
        assert trial.gamma == 1.0 - trial.broken / trial.total
        for center, perturbed in trial.witnesses:
            assert perturbed == "010"
            assert center in {"000", "011", "110"}
            assert verify_witness(f, dfa, center, perturbed, NEGATIVE)

    def test_vacuous_neighborhoods_count_as_unbroken(self):
        # Any single edit to an even-0s/even-1s string breaks a parity, so
        # positive centers have no same-label neighbors; nothing can break.
        dfa = tomita_dfa(5)
        trial = adversarial_accuracy(dfa, dfa, 8, 30, 1, POSITIVE, derive_rng(2, "v"))
        assert trial.gamma == 1.0 and trial.witnesses == ()

    def test_g5_positive_neighborhoods_all_negative(self):
        dfa = tomita_dfa(5)
        for w in enumerate_strings(dfa, 8, POSITIVE):
            for m in neighborhood(w, 1).members:
                assert dfa.classify(m) == NEGATIVE


class TestVerifyWitness:
    def test_accepts_genuine_witness(self):
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, ["11111"])
        assert verify_witness(f, dfa, "111111", "11111", POSITIVE)

    def test_rejects_when_classifier_correct(self):
        dfa = tomita_dfa(1)
        assert not verify_witness(dfa, dfa, "111111", "11111", POSITIVE)

    def test_rejects_cross_class_pair(self):
        # "011111" is negative, so it is not a same-label neighbor of 1^6.
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, ["011111"])
        assert not verify_witness(f, dfa, "111111", "011111", POSITIVE)


class TestVerifyModel:
    def test_oracle_report(self):
        dfa = tomita_dfa(6)
        report = verify_model(dfa, dfa, 15, 10, 4, 1, seed=9)
        assert report.gamma_pos == 1.0 and report.gamma_neg == 1.0
        assert len(report.trials) == 8
        assert all(t.witnesses == () for t in report.trials)

    def test_means_recompute_from_trials(self):
        dfa = tomita_dfa(3)
        f = blind_spot(dfa, ["010"])
        report = verify_model(f, dfa, 3, 20, 3, 1, seed=4)
        pos = [t.gamma for t in report.trials if t.label == POSITIVE]
        neg = [t.gamma for t in report.trials if t.label == NEGATIVE]
        assert report.gamma_pos == pytest.approx(np.mean(pos))
        assert report.gamma_neg == pytest.approx(np.mean(neg))

    def test_deterministic(self):
        dfa = tomita_dfa(4)
        a = verify_model(dfa, dfa, 12, 8, 2, 1, seed=11)
        b = verify_model(dfa, dfa, 12, 8, 2, 1, seed=11)
        assert a == b


class TestLocalInvariance:
    def test_holds_for_oracle(self):
        dfa = tomita_dfa(7)
        for x in ("", "0011", "0101", "1100"):
            assert local_invariance(dfa, dfa, x, 1) is None

    def test_returns_first_violation_in_canonical_order(self):
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, ["11111"])
        assert local_invariance(f, dfa, "111111", 1) == "11111"

    def test_requires_agreement_on_center(self):
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, ["111111"])
        with pytest.raises(ValueError):
            local_invariance(f, dfa, "111111", 1)

    def test_vacuous_for_g5_positives(self):
        # A classifier wrong on the entire radius-1 ball still passes when
        # the ball has no same-label members; only the center must agree.
        dfa = tomita_dfa(5)
        for x in ("00001111", "01010101"):
            assert dfa.classify(x) == POSITIVE
            f = blind_spot(dfa, neighborhood(x, 1).members)
            assert local_invariance(f, dfa, x, 1) is None


class TestEquivalenceCheck:
    def test_oracle_against_itself(self):
        dfa = tomita_dfa(3)
        res = equivalence_check(dfa, dfa, range(0, 9), 256, seed=0)
        assert res.agreement == 1.0
        assert res.witnesses == ()
        assert res.exact is True

    def test_exhaustive_counts_single_disagreement(self):
        dfa = tomita_dfa(2)
        f = blind_spot(dfa, ["010"])
        res = equivalence_check(f, dfa, range(0, 9), 256, seed=0)
        total = sum(2**n for n in range(0, 9))
        assert res.agreement == pytest.approx((total - 1) / total)
        assert res.witnesses == ("010",)
        assert res.exact is None  # callable, not a DFA

    def test_sampled_lengths_stay_deterministic(self):
        dfa = tomita_dfa(6)
        noisy = lambda w: 1 - dfa.classify(w) if w.count("1") % 5 == 0 else dfa.classify(w)
        a = equivalence_check(noisy, dfa, [40], 50, seed=21)
        b = equivalence_check(noisy, dfa, [40], 50, seed=21)
        assert a == b
        assert 0.0 < a.agreement < 1.0

    def test_oracle_sampled_agreement_is_one(self):
        dfa = tomita_dfa(4)
        res = equivalence_check(dfa, dfa, [40, 60], 50, seed=2)
        assert res.agreement == 1.0 and res.witnesses == ()

    def test_witness_cap(self):
        dfa = tomita_dfa(1)
        f = blind_spot(dfa, [w for n in range(5) for w in all_strings(n)])
        res = equivalence_check(f, dfa, range(0, 5), 1024, seed=0)
        assert res.agreement == 0.0
        assert len(res.witnesses) == 10

    def test_inequivalent_dfas_get_product_counterexample(self):
        a, b = tomita_dfa(1), tomita_dfa(2)
        res = equivalence_check(a, b, [2], 1024, seed=0)
        assert res.exact is False
        assert res.witnesses[0] == "1"  # shortest separating string
        assert res.agreement == 0.5  # of length 2, only "00"/"01" agree


class TestLengthSweep:
    def test_oracle_flat(self):
        dfa = tomita_dfa(7)
        rows = length_sweep(dfa, dfa, [5, 10, 20], 10, 1, seed=6)
        assert len(rows) == 6
        for row in rows:
            assert row["error"] == ""
            assert row["gamma"] == 1.0
            assert row["broken"] == 0 and row["total"] == 10

    def test_empty_class_becomes_error_row(self):
        # G5 has no positive strings of odd length.
        dfa = tomita_dfa(5)
        rows = length_sweep(dfa, dfa, [7], 10, 1, seed=0)
        by_label = {row["label"]: row for row in rows}
        assert by_label[NEGATIVE]["error"] == ""
        assert by_label[NEGATIVE]["gamma"] == 1.0
        bad = by_label[POSITIVE]
        assert bad["error"] != ""
        assert np.isnan(bad["gamma"]) and bad["total"] == 0
