"""Event dispatching strategies.

All strategies share one interface: decide(invocation, view) -> decision.
Baselines ignore data placement (round robin, least loaded, hash
affinity); the data-aware family scores nodes by a weighted mix of warm
code, byte locality and queue headroom; the proactive variant pins
recurring event clusters to nodes and feeds a popularity counter that a
periodic replication pass uses to copy hot objects toward demand. Work
stealing is a composable add-on that lets idle nodes pull queued work from
random victims.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple

from .cluster import Cluster, PlacementOutcome
from .engine import RandomSource
from .errors import ConfigError, NoNodesError

STRATEGY_NAMES = (
    "round_robin",
    "least_loaded",
    "hash_affinity",
    "mcgrath_queues",
    "data_aware",
    "proactive_cluster",
)

DEFAULT_WEIGHTS = (0.3, 0.5, 0.2)  # warm code, data locality, queue headroom
DEFAULT_QUEUE_CAP = 16


def stable_hash(text: str) -> int:
    """Platform-stable string hash (md5); Python's built-in hash is salted."""
    return int.from_bytes(hashlib.md5(text.encode("utf-8")).digest(), "big")


class ClusterView:
    """Read-only view of cluster state for decision making.

    The engine is single-threaded, so every accessor reads the same
    virtual instant; no copy is taken.
    """

    def __init__(self, cluster: Cluster):
        self._cluster = cluster

    @property
    def node_ids(self) -> list[int]:
        return self._cluster.node_ids

    def queue_len(self, node_id: int) -> int:
        return len(self._cluster.nodes[node_id].run_queue)

    def free_mem(self, node_id: int) -> int:
        return self._cluster.nodes[node_id].free_mem()

    def store_free(self, node_id: int) -> float:
        return self._cluster.nodes[node_id].store_free()

    def warm_idle_count(self, node_id: int, function: str) -> int:
        return self._cluster.nodes[node_id].warm_idle_count(function)

    def has_replica(self, object_id: str, node_id: int) -> bool:
        return node_id in self._cluster.objects[object_id].placements

    def locality_fraction(self, data_refs, node_id: int) -> float:
        return self._cluster.locality_fraction(data_refs, node_id)


@dataclass(slots=True)
class DispatchDecision:
    node: int
    dispatch_latency_ms: int
    rationale: str


class ClusterKey(NamedTuple):
    """Groups events by triggered code, referenced data and origin tag."""

    function: str
    data_signature: str
    origin: str


def make_cluster_key(inv) -> ClusterKey:
    sig = hashlib.md5(";".join(sorted(inv.data_refs)).encode("utf-8")).hexdigest()[:16]
    return ClusterKey(inv.function, sig, inv.origin)


def locality_score(view: ClusterView, inv, node_id: int,
                   weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
                   queue_cap: int = DEFAULT_QUEUE_CAP) -> float:
    """How good a node is for an invocation, in [0, 1] for weights summing
    to 1: warm code present, byte locality of the references, and queue
    headroom."""
    w_code, w_data, w_load = weights
    code_warm = 1.0 if view.warm_idle_count(node_id, inv.function) else 0.0
    data_local = view.locality_fraction(inv.data_refs, node_id)
    headroom = 1.0 - min(1.0, view.queue_len(node_id) / queue_cap)
    return w_code * code_warm + w_data * data_local + w_load * headroom


class DispatchStrategy:
    """Base class; subclasses implement decide()."""

    name = "base"
    default_latency_ms = 1
    needs_replication = False

    def __init__(self, latency_ms: int | None = None):
        self.dispatch_latency_ms = (
            self.default_latency_ms if latency_ms is None else latency_ms
        )

    def decide(self, inv, view: ClusterView) -> DispatchDecision:
        raise NotImplementedError

    def _require_nodes(self, view: ClusterView) -> list[int]:
        ids = view.node_ids
        if not ids:
            raise NoNodesError("no live nodes to dispatch to")
        return ids


class RoundRobinStrategy(DispatchStrategy):
    name = "round_robin"

    def __init__(self, latency_ms: int | None = None):
        super().__init__(latency_ms)
        self.cursor = 0

    def decide(self, inv, view: ClusterView) -> DispatchDecision:
        ids = self._require_nodes(view)
        node = ids[self.cursor % len(ids)]
        self.cursor += 1
        return DispatchDecision(node, self.dispatch_latency_ms, "round_robin")


class LeastLoadedStrategy(DispatchStrategy):
    name = "least_loaded"

    def decide(self, inv, view: ClusterView) -> DispatchDecision:
        ids = self._require_nodes(view)
        node = min(ids, key=lambda n: (view.queue_len(n), n))
        return DispatchDecision(
            node, self.dispatch_latency_ms, f"queue={view.queue_len(node)}"
        )


class HashAffinityStrategy(DispatchStrategy):
    name = "hash_affinity"

    def decide(self, inv, view: ClusterView) -> DispatchDecision:
        ids = self._require_nodes(view)
        node = ids[stable_hash(inv.function) % len(ids)]
        return DispatchDecision(node, self.dispatch_latency_ms, "hash")


class DataAwareStrategy(DispatchStrategy):
    """Reactive localization: send each event to the highest-scoring node."""

    name = "data_aware"
    default_latency_ms = 2  # placement lookup is not free

    def __init__(self, w_code: float = DEFAULT_WEIGHTS[0], w_data: float = DEFAULT_WEIGHTS[1],
                 w_load: float = DEFAULT_WEIGHTS[2], queue_cap: int = DEFAULT_QUEUE_CAP,
                 latency_ms: int | None = None):
        super().__init__(latency_ms)
        self.weights = (w_code, w_data, w_load)
        self.queue_cap = queue_cap

    def _best_node(self, inv, view: ClusterView) -> tuple[int, float]:
        best_node = -1
        best_score = float("-inf")
        for nid in self._require_nodes(view):  # ascending ids: ties keep the lowest
            score = locality_score(view, inv, nid, self.weights, self.queue_cap)
            if score > best_score:
                best_score = score
                best_node = nid
        return best_node, best_score

    def decide(self, inv, view: ClusterView) -> DispatchDecision:
        node, score = self._best_node(inv, view)
        return DispatchDecision(node, self.dispatch_latency_ms, f"score={score:.4f}")


class PopularityCounter:
    """Decayed per-object access counts plus per-(object, node) demand
    accumulated since the last replication pass."""

    def __init__(self, decay: float = 0.5):
        if not 0.0 < decay <= 1.0:
            raise ConfigError("decay must be in (0, 1]")
        self.decay = decay
        self.counts: dict[str, float] = {}
        self.demand: dict[tuple[str, int], int] = {}

    def record(self, data_refs, node_id: int) -> None:
        for ref in data_refs:
            self.counts[ref] = self.counts.get(ref, 0.0) + 1.0
            key = (ref, node_id)
            self.demand[key] = self.demand.get(key, 0) + 1

    def tick_decay(self) -> None:
        self.counts = {
            k: v * self.decay for k, v in self.counts.items() if v * self.decay > 1e-9
        }
        self.demand.clear()


class ProactiveClusterStrategy(DataAwareStrategy):
    """Proactive localization: equal cluster keys stick to one node, and
    reference popularity is tracked for the replication pass."""

    name = "proactive_cluster"
    needs_replication = True

    def __init__(self, w_code: float = DEFAULT_WEIGHTS[0], w_data: float = DEFAULT_WEIGHTS[1],
                 w_load: float = DEFAULT_WEIGHTS[2], queue_cap: int = DEFAULT_QUEUE_CAP,
                 latency_ms: int | None = None, decay: float = 0.5):
        super().__init__(w_code, w_data, w_load, queue_cap, latency_ms)
        self.assignments: dict[ClusterKey, int] = {}
        self.counters = PopularityCounter(decay)

    def decide(self, inv, view: ClusterView) -> DispatchDecision:
        key = make_cluster_key(inv)
        node = self.assignments.get(key)
        if node is None:
            node, score = self._best_node(inv, view)
            self.assignments[key] = node
            rationale = f"key={key.data_signature} score={score:.4f}"
        else:
            rationale = f"key={key.data_signature} sticky"
        self.counters.record(inv.data_refs, node)
        return DispatchDecision(node, self.dispatch_latency_ms, rationale)


@dataclass(frozen=True, slots=True)
class ReplicationAction:
    object_id: str
    node: int
    placed: bool
    note: str


def replication_tick(counters: PopularityCounter, cluster: Cluster,
                     threshold: float = 10.0) -> list[ReplicationAction]:
    """Copy each sufficiently popular object to the node demanding it most
    among those lacking a replica, then decay all counts.

    Capacity-exceeded placements are skipped and reported, not retried.
    """
    actions: list[ReplicationAction] = []
    for object_id in sorted(counters.counts):
        if counters.counts[object_id] < threshold:
            continue
        obj = cluster.objects[object_id]
        best_node = -1
        best_demand = 0
        for nid in cluster.node_ids:
            if nid in obj.placements:
                continue
            demand = counters.demand.get((object_id, nid), 0)
            if demand > best_demand:  # ties keep the lowest node id
                best_demand = demand
                best_node = nid
        if best_node < 0:
            continue
        outcome = cluster.place_object(object_id, best_node)
        placed = outcome is PlacementOutcome.PLACED
        actions.append(ReplicationAction(
            object_id, best_node, placed,
            "placed" if placed else outcome.value,
        ))
    counters.tick_decay()
    return actions


def steal_work(cluster: Cluster, idle_node_id: int, rng: RandomSource) -> list:
    """One steal attempt for an idle node: pick a uniformly random other
    node; if its queue holds at least two items, move the back half
    (ceil(len/2)) to the idle node. Returns the moved queue items."""
    others = [nid for nid in cluster.node_ids if nid != idle_node_id]
    if not others:
        return []
    victim = cluster.nodes[others[rng.randint(0, len(others) - 1)]]
    qlen = len(victim.run_queue)
    if qlen < 2:
        return []
    batch = [victim.run_queue.pop() for _ in range((qlen + 1) // 2)]
    batch.reverse()  # preserve original queue order at the thief
    cluster.nodes[idle_node_id].run_queue.extend(batch)
    return batch


def make_strategy(name: str, params: dict | None = None,
                  latency_ms: int | None = None) -> DispatchStrategy:
    """Instantiate a registered strategy. mcgrath_queues is warm-first
    matching: data-aware scoring with full weight on warm code and a small
    load term so ties fall to the shortest queue."""
    params = dict(params or {})
    try:
        if name == "round_robin":
            return RoundRobinStrategy(latency_ms)
        if name == "least_loaded":
            return LeastLoadedStrategy(latency_ms)
        if name == "hash_affinity":
            return HashAffinityStrategy(latency_ms)
        if name == "data_aware":
            return DataAwareStrategy(latency_ms=latency_ms, **params)
        if name == "proactive_cluster":
            return ProactiveClusterStrategy(latency_ms=latency_ms, **params)
        if name == "mcgrath_queues":
            params.setdefault("w_code", 1.0)
            params.setdefault("w_data", 0.0)
            params.setdefault("w_load", 0.1)
            strategy = DataAwareStrategy(
                latency_ms=1 if latency_ms is None else latency_ms, **params
            )
            strategy.name = "mcgrath_queues"
            return strategy
    except TypeError as exc:
        raise ConfigError(f"bad parameters for strategy {name!r}: {exc}") from exc
    raise ConfigError(
        f"unknown strategy {name!r}; registered strategies: {', '.join(STRATEGY_NAMES)}"
    )
