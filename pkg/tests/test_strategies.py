"""Dispatch strategies: baselines, scoring, stickiness, replication, stealing."""

import pytest
from hypothesis import given, settings, strategies as st

from dispatchsim.cluster import Cluster, ClusterParams, DataObject, FunctionSpec
from dispatchsim.engine import RandomSource
from dispatchsim.strategies import (
    STRATEGY_NAMES,
    ClusterView,
    DataAwareStrategy,
    PopularityCounter,
    locality_score,
    make_cluster_key,
    make_strategy,
    replication_tick,
    stable_hash,
    steal_work,
)
from dispatchsim.errors import ConfigError
from dispatchsim.workload import Invocation

F1 = FunctionSpec("f1", code_size=10, flavor=128, compute_ms=50)


def make_cluster(nodes=3, mem=1024, store=1000, objects=()):
    return Cluster(
        ClusterParams(nodes=nodes, mem_capacity=mem, store_capacity=store),
        {"f1": F1},
        [DataObject(oid, size) for oid, size in objects],
    )


def inv(function="f1", refs=(), origin="web", arrival=0, ident="i0"):
    return Invocation(ident, function, tuple(refs), origin, arrival)


# ---- baselines -----------------------------------------------------------------


def test_round_robin_single_node():
    view = ClusterView(make_cluster(nodes=1))
    rr = make_strategy("round_robin")
    assert [rr.decide(inv(), view).node for _ in range(4)] == [0, 0, 0, 0]


def test_round_robin_cycles_in_node_order():
    view = ClusterView(make_cluster(nodes=3))
    rr = make_strategy("round_robin")
    assert [rr.decide(inv(), view).node for _ in range(6)] == [0, 1, 2, 0, 1, 2]


def test_round_robin_exact_balance():
    # Counting oracle: 4k decisions over 4 nodes land exactly k per node.
    view = ClusterView(make_cluster(nodes=4))
    rr = make_strategy("round_robin")
    counts = {n: 0 for n in range(4)}
    for _ in range(4 * 250):
        counts[rr.decide(inv(), view).node] += 1
    assert counts == {0: 250, 1: 250, 2: 250, 3: 250}


def test_least_loaded_picks_shortest_queue():
    c = make_cluster(nodes=3)
    c.nodes[0].run_queue.extend([("x", 1)] * 3)
    c.nodes[2].run_queue.extend([("x", 1)] * 2)
    assert make_strategy("least_loaded").decide(inv(), ClusterView(c)).node == 1


def test_least_loaded_ties_break_to_lowest_id():
    c = make_cluster(nodes=3)
    assert make_strategy("least_loaded").decide(inv(), ClusterView(c)).node == 0


def test_least_loaded_sees_queue_growth():
    c = make_cluster(nodes=3)
    c.nodes[0].run_queue.append(("x", 1))
    c.nodes[1].run_queue.append(("x", 1))
    strategy = make_strategy("least_loaded")
    view = ClusterView(c)
    chosen = strategy.decide(inv(), view).node
    assert chosen == 2
    c.nodes[chosen].run_queue.append(("x", 1))  # dispatch enqueues on the target
    assert view.queue_len(chosen) == 1
    assert strategy.decide(inv(), view).node == 0


def test_hash_affinity_is_sticky_per_function():
    view = ClusterView(make_cluster(nodes=4))
    strategy = make_strategy("hash_affinity")
    first = strategy.decide(inv("f1"), view).node
    assert all(strategy.decide(inv("f1"), view).node == first for _ in range(5))


def test_hash_affinity_single_node():
    view = ClusterView(make_cluster(nodes=1))
    assert make_strategy("hash_affinity").decide(inv("whatever"), view).node == 0


def test_hash_affinity_spreads_distinct_names():
    # Counting oracle on the fixed hash: 1000 names over 4 nodes.
    counts = {n: 0 for n in range(4)}
    for i in range(1000):
        counts[stable_hash(f"fn{i}") % 4] += 1
    assert all(150 <= c <= 350 for c in counts.values())


# ---- locality score --------------------------------------------------------------


def test_score_is_one_for_warm_local_idle():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 0)
    _, container = c.acquire_container(0, "f1")
    c.release_container(container)
    score = locality_score(ClusterView(c), inv(refs=("a",)), 0)
    assert score == pytest.approx(1.0)


def test_score_is_zero_for_cold_remote_full_queue():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 1)
    c.nodes[0].run_queue.extend([("x", 1)] * 16)  # at queue_cap
    score = locality_score(ClusterView(c), inv(refs=("a",)), 0)
    assert score == pytest.approx(0.0)


def test_score_hand_arithmetic():
    # warm=1, locality=0.25, queue 5 of cap 10: 0.3 + 0.125 + 0.1 = 0.525
    c = make_cluster(objects=[("a", 100), ("b", 300)])
    c.place_object("a", 0)
    c.place_object("b", 1)
    _, container = c.acquire_container(0, "f1")
    c.release_container(container)
    c.nodes[0].run_queue.extend([("x", 1)] * 5)
    score = locality_score(ClusterView(c), inv(refs=("a", "b")), 0, queue_cap=10)
    assert score == pytest.approx(0.525)


# ---- data-aware (reactive) --------------------------------------------------------


def test_data_aware_follows_the_bytes():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 2)
    decision = make_strategy("data_aware").decide(inv(refs=("a",)), ClusterView(c))
    assert decision.node == 2
    assert "score=" in decision.rationale


def test_data_aware_empty_refs_reduces_to_load_term():
    c = make_cluster(nodes=3)
    c.nodes[0].run_queue.append(("x", 1))
    c.nodes[1].run_queue.append(("x", 1))
    assert make_strategy("data_aware").decide(inv(), ClusterView(c)).node == 2


def test_data_aware_argmax_matches_brute_force_oracle():
    c = make_cluster(nodes=3, objects=[("a", 100), ("b", 50), ("c", 10)])
    c.place_object("a", 1)
    c.place_object("b", 2)
    c.place_object("c", 0)
    c.nodes[1].run_queue.extend([("x", 1)] * 4)
    _, container = c.acquire_container(2, "f1")
    c.release_container(container)
    view = ClusterView(c)
    event = inv(refs=("a", "b"))
    strategy = make_strategy("data_aware")
    decision = strategy.decide(event, view)
    scores = {n: locality_score(view, event, n) for n in view.node_ids}
    best = max(sorted(scores), key=lambda n: (scores[n], -n))
    assert decision.node == best
    assert decision.rationale == f"score={scores[best]:.4f}"


@settings(max_examples=50, deadline=None)
@given(
    queues=st.lists(st.integers(min_value=0, max_value=20), min_size=2, max_size=6),
    warm=st.lists(st.booleans(), min_size=2, max_size=6),
    scale=st.floats(min_value=0.01, max_value=50.0, allow_nan=False),
)
def test_weight_scaling_leaves_argmax_unchanged(queues, warm, scale):
    n = min(len(queues), len(warm))
    c = make_cluster(nodes=n, objects=[("a", 100)])
    c.place_object("a", n - 1)
    for nid in range(n):
        c.nodes[nid].run_queue.extend([("x", 1)] * queues[nid])
        if warm[nid]:
            _, container = c.acquire_container(nid, "f1")
            c.release_container(container)
    view = ClusterView(c)
    event = inv(refs=("a",))
    base = DataAwareStrategy().decide(event, view).node
    scaled = DataAwareStrategy(
        w_code=0.3 * scale, w_data=0.5 * scale, w_load=0.2 * scale
    ).decide(event, view).node
    assert base == scaled


def test_every_strategy_returns_a_live_node():
    c = make_cluster(nodes=5, objects=[("a", 10)])
    c.place_object("a", 3)
    view = ClusterView(c)
    for name in STRATEGY_NAMES:
        decision = make_strategy(name).decide(inv(refs=("a",)), view)
        assert decision.node in view.node_ids


def test_mcgrath_prefers_warm_then_short_queue():
    c = make_cluster(nodes=3, objects=[("a", 100)])
    c.place_object("a", 0)  # data would pull to 0, but this policy ignores bytes
    _, container = c.acquire_container(2, "f1")
    c.release_container(container)
    strategy = make_strategy("mcgrath_queues")
    assert strategy.decide(inv(refs=("a",)), ClusterView(c)).node == 2
    # without any warm container, ties fall to the shortest queue
    cold = make_cluster(nodes=3)
    cold.nodes[0].run_queue.append(("x", 1))
    assert make_strategy("mcgrath_queues").decide(inv(), ClusterView(cold)).node == 1


def test_unknown_strategy_errors_with_registry():
    with pytest.raises(ConfigError, match="round_robin"):
        make_strategy("definitely_not_real")


# ---- dispatch latency ---------------------------------------------------------------


def test_default_dispatch_latencies():
    assert make_strategy("round_robin").dispatch_latency_ms == 1
    assert make_strategy("least_loaded").dispatch_latency_ms == 1
    assert make_strategy("hash_affinity").dispatch_latency_ms == 1
    assert make_strategy("mcgrath_queues").dispatch_latency_ms == 1
    assert make_strategy("data_aware").dispatch_latency_ms == 2
    assert make_strategy("proactive_cluster").dispatch_latency_ms == 2


def test_latency_override_applies_to_every_decision():
    view = ClusterView(make_cluster())
    strategy = make_strategy("data_aware", latency_ms=5)
    assert all(strategy.decide(inv(), view).dispatch_latency_ms == 5 for _ in range(3))


# ---- proactive clustering -------------------------------------------------------------


def test_cluster_key_equality_and_stability():
    a = make_cluster_key(inv(refs=("x", "y"), ident="a"))
    b = make_cluster_key(inv(refs=("y", "x"), ident="b"))  # set semantics via sorting
    assert a == b
    assert a != make_cluster_key(inv(refs=("x",), ident="c"))
    assert a != make_cluster_key(inv(refs=("x", "y"), origin="iot", ident="d"))


def test_proactive_is_sticky_for_equal_keys():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 1)
    strategy = make_strategy("proactive_cluster")
    view = ClusterView(c)
    first = strategy.decide(inv(refs=("a",), ident="i1"), view).node
    # shift load and warmth elsewhere; the key still pins the node
    c.nodes[first].run_queue.extend([("x", 1)] * 10)
    again = strategy.decide(inv(refs=("a",), ident="i2"), view)
    assert again.node == first
    assert "sticky" in again.rationale


def test_proactive_disjoint_refs_form_distinct_keys():
    c = make_cluster(objects=[("a", 100), ("b", 100)])
    c.place_object("a", 1)
    c.place_object("b", 2)
    strategy = make_strategy("proactive_cluster")
    view = ClusterView(c)
    assert strategy.decide(inv(refs=("a",), ident="i1"), view).node == 1
    assert strategy.decide(inv(refs=("b",), ident="i2"), view).node == 2
    assert len(strategy.assignments) == 2


def test_proactive_first_assignment_matches_data_aware():
    c1 = make_cluster(objects=[("a", 100)])
    c1.place_object("a", 2)
    c2 = make_cluster(objects=[("a", 100)])
    c2.place_object("a", 2)
    event = inv(refs=("a",))
    assert (make_strategy("proactive_cluster").decide(event, ClusterView(c1)).node
            == make_strategy("data_aware").decide(event, ClusterView(c2)).node)


def test_proactive_records_demand_at_chosen_node():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 1)
    strategy = make_strategy("proactive_cluster")
    view = ClusterView(c)
    for i in range(3):
        strategy.decide(inv(refs=("a",), ident=f"i{i}"), view)
    assert strategy.counters.counts["a"] == 3.0
    assert strategy.counters.demand[("a", 1)] == 3


# ---- replication ---------------------------------------------------------------------


def test_replication_noop_below_threshold():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 0)
    counters = PopularityCounter()
    counters.counts["a"] = 9.0
    assert replication_tick(counters, c, threshold=10.0) == []


def test_replication_targets_highest_demand_node_lacking_replica():
    # Threshold/argmax oracle: count 12, demand mostly from node 2.
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 0)
    counters = PopularityCounter()
    counters.counts["a"] = 12.0
    counters.demand[("a", 0)] = 20  # already has the replica; not a candidate
    counters.demand[("a", 1)] = 2
    counters.demand[("a", 2)] = 7
    actions = replication_tick(counters, c, threshold=10.0)
    assert len(actions) == 1
    assert actions[0].node == 2 and actions[0].placed
    assert 2 in c.objects["a"].placements


def test_replication_decays_counts_and_resets_demand():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 0)
    counters = PopularityCounter(decay=0.5)
    counters.counts["a"] = 12.0
    counters.demand[("a", 1)] = 4
    replication_tick(counters, c, threshold=10.0)
    assert counters.counts["a"] == 6.0
    assert counters.demand == {}


def test_replication_skips_capacity_exceeded_and_reports():
    c = make_cluster(store=50, objects=[("a", 100)])
    counters = PopularityCounter()
    counters.counts["a"] = 15.0
    counters.demand[("a", 1)] = 5
    actions = replication_tick(counters, c, threshold=10.0)
    assert len(actions) == 1
    assert not actions[0].placed and actions[0].note == "no_capacity"


def test_replication_ignores_objects_without_unserved_demand():
    c = make_cluster(objects=[("a", 100)])
    c.place_object("a", 0)
    counters = PopularityCounter()
    counters.counts["a"] = 50.0
    counters.demand[("a", 0)] = 50  # all demand already local
    assert replication_tick(counters, c, threshold=10.0) == []


# ---- work stealing ---------------------------------------------------------------------


class ForcedVictim:
    """rng stub that always selects the first candidate."""

    def randint(self, lo, hi):
        return lo

    def random(self):
        return 0.0


def test_steal_from_empty_cluster_is_empty():
    c = make_cluster(nodes=3)
    assert steal_work(c, 0, RandomSource(1, "steal")) == []


def test_steal_single_node_has_no_neighbor():
    c = make_cluster(nodes=1)
    assert steal_work(c, 0, RandomSource(1, "steal")) == []


def test_forced_victim_transfers_back_half():
    # ceil(5/2) = 3 stolen from the tail; victim keeps the first two.
    c = make_cluster(nodes=2)
    c.nodes[1].run_queue.extend((f"t{i}", 1) for i in range(5))
    batch = steal_work(c, 0, ForcedVictim())
    assert [item[0] for item in batch] == ["t2", "t3", "t4"]
    assert [item[0] for item in c.nodes[1].run_queue] == ["t0", "t1"]
    assert [item[0] for item in c.nodes[0].run_queue] == ["t2", "t3", "t4"]


def test_steal_leaves_single_item_queues_alone():
    c = make_cluster(nodes=2)
    c.nodes[1].run_queue.append(("only", 1))
    assert steal_work(c, 0, ForcedVictim()) == []
    assert len(c.nodes[1].run_queue) == 1


@settings(max_examples=40, deadline=None)
@given(
    lengths=st.lists(st.integers(min_value=0, max_value=9), min_size=2, max_size=5),
    seed=st.integers(min_value=0, max_value=999),
)
def test_stealing_conserves_the_queued_multiset(lengths, seed):
    c = make_cluster(nodes=len(lengths))
    expected = []
    for nid, qlen in enumerate(lengths):
        for i in range(qlen):
            item = (f"n{nid}-t{i}", 1)
            c.nodes[nid].run_queue.append(item)
            expected.append(item[0])
    rng = RandomSource(seed, "steal")
    for _ in range(10):
        for nid in c.node_ids:
            if not c.nodes[nid].run_queue:
                steal_work(c, nid, rng)
    remaining = [item[0] for node in c.nodes.values() for item in node.run_queue]
    assert sorted(remaining) == sorted(expected)


def test_repeated_polls_eventually_steal_from_a_loaded_victim():
    # With one loaded node and one idle node, a handful of polls must move work.
    c = make_cluster(nodes=4)
    c.nodes[3].run_queue.extend((f"t{i}", 1) for i in range(6))
    rng = RandomSource(123, "steal")
    moved = 0
    for _ in range(len(c.node_ids)):
        moved += len(steal_work(c, 0, rng))
        if moved:
            break
    assert moved >= 1
