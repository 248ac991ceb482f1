"""Quantization, transition diagrams, pruning, and the full pipeline.

The central guarantee: traces built from one-hot DFA states round-trip
through the pipeline back to a language-equivalent automaton.
"""

import numpy as np
import pytest

from rnnverify.automata import (
    NEGATIVE,
    POSITIVE,
    TOMITA_IDS,
    enumerate_strings,
    equivalent,
    generate_dataset,
    split_dataset,
    tomita_dfa,
)
from rnnverify.extraction import (
    ExtractionConfig,
    ExtractionError,
    build_diagram,
    extract_dfa,
    kmeans,
    prune_to_dfa,
    quantize,
    synthetic_state_traces,
)
from rnnverify.rnn import TrainConfig, new_model, record_traces, train


class TestKmeans:
    def test_separates_well_spaced_pairs(self):
        pts = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]])
        res = kmeans(pts, k=2, seed=0)
        a = res.assignments
        assert a[0] == a[1] and a[2] == a[3] and a[0] != a[2]

    def test_k_equal_points_gives_singletons(self):
        pts = np.array([[0.0], [1.0], [2.0], [3.0]])
        res = kmeans(pts, k=4, seed=1)
        assert res.wcss == 0.0
        assert len(set(res.assignments.tolist())) == 4

    def test_reduces_k_on_duplicate_points(self):
        pts = np.array([[1.0, 2.0]] * 10 + [[3.0, 4.0]] * 5)
        res = kmeans(pts, k=6, seed=0)
        assert res.k == 2  # only two distinct vectors exist
        assert len(set(res.assignments.tolist())) == 2

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(60, 4))
        a = kmeans(pts, k=5, seed=9)
        b = kmeans(pts, k=5, seed=9)
        assert np.array_equal(a.assignments, b.assignments)
        assert np.array_equal(a.centroids, b.centroids)

    def test_assignments_minimize_distance(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(40, 3))
        res = kmeans(pts, k=4, seed=2)
        d = ((pts[:, None, :] - res.centroids[None, :, :]) ** 2).sum(axis=2)
        assert np.array_equal(res.assignments, d.argmin(axis=1))

    def test_more_restarts_never_worse(self):
        rng = np.random.default_rng(7)
        pts = rng.normal(size=(80, 2))
        one = kmeans(pts, k=6, seed=4, restarts=1)
        many = kmeans(pts, k=6, seed=4, restarts=8)
        assert many.wcss <= one.wcss + 1e-12


class TestDiagram:
    def make_quant(self, dfa, strings):
        traces = synthetic_state_traces(dfa, strings)
        quant = quantize(traces, ExtractionConfig(k=dfa.num_states, kmeans_seed=0))
        return traces, quant

    def test_single_trace_counts(self):
        dfa = tomita_dfa(1)
        traces, quant = self.make_quant(dfa, ["1"])
        diagram = build_diagram(traces, quant)
        [(key, cnt)] = list(diagram.counts.items())
        src, sym, dst = key
        assert sym == "1" and cnt == 1
        assert src == diagram.initial_cluster

    def test_total_count_equals_symbols_consumed(self):
        dfa = tomita_dfa(3)
        strings = ["0110", "11", "000", ""]
        traces, quant = self.make_quant(dfa, strings)
        diagram = build_diagram(traces, quant)
        assert sum(diagram.counts.values()) == sum(len(w) for w in strings)

    def test_shared_prefix_doubles_counts(self):
        dfa = tomita_dfa(4)
        one, q1 = self.make_quant(dfa, ["01"])
        two, q2 = self.make_quant(dfa, ["01", "01"])
        d1 = build_diagram(one, q1)
        d2 = build_diagram(two, q2)
        assert sum(d2.counts.values()) == 2 * sum(d1.counts.values())

    def test_prune_keeps_argmax(self):
        dfa = tomita_dfa(1)
        # "11" twice and "10" once: from the accepting state, symbol paths
        # disagree, majority must win
        traces, quant = self.make_quant(dfa, ["11", "11", "10"])
        diagram = build_diagram(traces, quant)
        pruned = prune_to_dfa(diagram)
        # majority path keeps "11" accepted
        assert pruned.accepts("11")

    def test_unobserved_pairs_get_rejecting_sink(self):
        dfa = tomita_dfa(1)
        traces, quant = self.make_quant(dfa, ["1"])  # never consumes "0"
        diagram = build_diagram(traces, quant)
        pruned = prune_to_dfa(diagram)
        # every string with a 0 falls into the sink and is rejected
        assert not pruned.accepts("0")
        assert not pruned.accepts("01")
        assert not pruned.accepts("0111")


class TestRoundTrip:
    @pytest.mark.parametrize("g", TOMITA_IDS)
    def test_oracle_recovered_exactly(self, g):
        dfa = tomita_dfa(g)
        strings = []
        for n in range(0, 9):
            strings.extend(enumerate_strings(dfa, n, POSITIVE))
            strings.extend(enumerate_strings(dfa, n, NEGATIVE))
        traces = synthetic_state_traces(dfa, strings)
        quant = quantize(traces, ExtractionConfig(k=dfa.num_states, kmeans_seed=0))
        diagram = build_diagram(traces, quant)
        from rnnverify.automata import minimize

        recovered = minimize(prune_to_dfa(diagram))
        same, cex = equivalent(recovered, dfa)
        assert same, f"g{g}: recovered automaton differs on {cex!r}"


class TestExtractDfa:
    def trained_model(self):
        ds = generate_dataset(1, 1, 10, 80, seed=21)
        ds = split_dataset(ds, 0.8, seed=22)
        model = new_model("second_order", 8, seed=2)
        model, log = train(model, ds, TrainConfig(max_epochs=120, seed=3))
        assert log.reached_target
        return model, ds

    def test_trained_model_yields_small_accurate_dfa(self):
        model, ds = self.trained_model()
        out = extract_dfa(model, ds, ExtractionConfig(k=8, kmeans_seed=0))
        assert out.dfa.num_states <= out.pre_minimization_states
        # success means perfect accuracy on the held-out split
        from rnnverify.evaluation import accuracy

        assert accuracy(out.dfa, ds, "test") == 1.0
        # the oracle itself is matched on every non-empty string it saw
        # lengths for; the empty string can land in a vote-less start
        # cluster (no training trace ends there), so it is excluded
        oracle = tomita_dfa(1)
        for n in range(1, 11):
            for label in (POSITIVE, NEGATIVE):
                for w in enumerate_strings(oracle, n, label):
                    assert out.dfa.classify(w) == oracle.classify(w)

    def test_deterministic(self):
        model, ds = self.trained_model()
        cfg = ExtractionConfig(k=6, kmeans_seed=11)
        a = extract_dfa(model, ds, cfg)
        b = extract_dfa(model, ds, cfg)
        assert a.dfa == b.dfa

    def test_provenance_recorded(self):
        model, ds = self.trained_model()
        out = extract_dfa(model, ds, ExtractionConfig(k=5, kmeans_seed=1),
                          trial_index=3)
        p = out.provenance
        assert p["grammar"] == 1 and p["cell"] == "second_order"
        assert p["k"] == 5 and p["kmeans_seed"] == 1
        assert p["trial_index"] == 3

    def test_stage_error_labelled(self):
        model, ds = self.trained_model()
        empty = type(ds)(
            samples=ds.samples,
            train_indices=(),
            test_indices=tuple(range(len(ds))),
            grammar_id=ds.grammar_id,
        )
        with pytest.raises(ExtractionError) as err:
            extract_dfa(model, empty, ExtractionConfig(k=4, kmeans_seed=0))
        assert err.value.stage == "traces"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExtractionConfig(k=1, kmeans_seed=0)
        with pytest.raises(ValueError):
            ExtractionConfig(k=4, kmeans_seed=0, restarts=0)


class TestQuantize:
    def test_assignment_covers_every_state_vector(self):
        model = new_model("elman", 5, seed=1)
        traces = record_traces(model, ["0101", "11", ""])
        quant = quantize(traces, ExtractionConfig(k=3, kmeans_seed=0))
        assert len(quant.assignments) == len(traces)
        for trace, assign in zip(traces, quant.assignments):
            assert len(assign) == trace.states.shape[0]
            assert all(0 <= a < quant.k for a in assign)

    def test_initial_states_share_a_cluster(self):
        # h0 is identical across traces, so its cluster must be too
        model = new_model("gru", 4, seed=5)
        traces = record_traces(model, ["01", "10", "111"])
        quant = quantize(traces, ExtractionConfig(k=4, kmeans_seed=2))
        starts = {assign[0] for assign in quant.assignments}
        assert len(starts) == 1
