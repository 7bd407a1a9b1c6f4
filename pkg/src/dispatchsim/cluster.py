"""Cluster state and cost model.

Nodes host memory-flavored containers with a warm/cold lifecycle and a
local data store. Every invocation produces a phase timeline:

    dispatch -> queue wait -> boot -> code fetch -> data fetch -> compute -> write-back

Overhead phases are zero for a warm container with locally cached data;
remote bytes pay a latency plus serialized bandwidth cost. Fetched data is
written through into the executing node's store (FIFO eviction of
non-origin replicas under capacity pressure; origin replicas are never
evicted), so repeated work against the same data gets cheaper.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import SimulationError, UnknownNodeError, UnknownObjectError

DEFAULT_FLAVORS = (64, 128, 256, 512, 1024)

# Code and result backends default to an external store that is remote to
# every node (a database-like service off the compute cluster).
EXTERNAL_STORE = "external"


@dataclass(frozen=True, slots=True)
class FunctionSpec:
    """A deployed function: sizes in MB, pure compute time in ms."""

    name: str
    code_size: float = 0.0
    flavor: int = 128
    compute_ms: int = 1
    write_back: float = 0.0


@dataclass(slots=True)
class DataObject:
    """A shared data object and the node ids currently holding a replica."""

    id: str
    size: float
    placements: set[int] = field(default_factory=set)
    origin: int | None = None


@dataclass(slots=True)
class Container:
    """One container; a busy container hosts exactly one invocation."""

    function: str
    node: int
    flavor: int
    busy: bool = True
    expiry_handle: object | None = None  # cancellable engine occurrence


@dataclass(frozen=True, slots=True)
class NetworkModel:
    """Uniform node-to-node transfer cost: fixed latency plus bandwidth."""

    latency_ms: int = 1
    bandwidth_mb_per_s: float = 100.0

    def transfer_time(self, size_mb: float, remote: bool) -> int:
        """Milliseconds to move size_mb; local access is free."""
        if not remote:
            return 0
        return self.latency_ms + math.ceil(size_mb * 1000.0 / self.bandwidth_mb_per_s)


@dataclass(slots=True)
class PhaseTimeline:
    """Per-invocation time breakdown; all phases are integer ms."""

    dispatch_ms: int = 0
    queue_wait_ms: int = 0
    boot_ms: int = 0
    code_fetch_ms: int = 0
    data_fetch_ms: int = 0
    compute_ms: int = 0
    write_back_ms: int = 0
    started_at: int = 0
    finished_at: int = 0

    def phase_sum(self) -> int:
        return (
            self.dispatch_ms
            + self.queue_wait_ms
            + self.boot_ms
            + self.code_fetch_ms
            + self.data_fetch_ms
            + self.compute_ms
            + self.write_back_ms
        )

    def actual_ms(self) -> int:
        return self.finished_at - self.started_at

    def active_ms(self) -> int:
        """Time the container is occupied (everything but dispatch and queue)."""
        return (
            self.boot_ms
            + self.code_fetch_ms
            + self.data_fetch_ms
            + self.compute_ms
            + self.write_back_ms
        )


class AcquireOutcome(Enum):
    WARM_HIT = "warm_hit"
    COLD_START = "cold_start"
    REJECTED = "rejected"


class PlacementOutcome(Enum):
    PLACED = "placed"
    ALREADY_PRESENT = "already_present"
    NO_CAPACITY = "no_capacity"


@dataclass(frozen=True)
class ClusterParams:
    """Static cluster configuration; capacities in MB, times in ms."""

    nodes: int = 1
    mem_capacity: int = 4096
    store_capacity: float = 4000.0
    flavors: tuple[int, ...] = DEFAULT_FLAVORS
    network: NetworkModel = NetworkModel()
    container_boot_ms: int = 100
    keep_alive_ms: int = 600_000
    billing_granularity_ms: int = 100
    max_execution_ms: int = 300_000
    code_store: int | str = EXTERNAL_STORE
    result_store: int | str = EXTERNAL_STORE


class Node:
    """Mutable per-node state: containers, local store, run queue, accumulators."""

    def __init__(self, node_id: int, mem_capacity: int, store_capacity: float):
        self.id = node_id
        self.mem_capacity = mem_capacity
        self.store_capacity = store_capacity
        self.mem_used = 0
        self.store_used = 0.0
        self.warm_pool: dict[str, list[Container]] = {}
        self.busy_count = 0
        self.store_entries: dict[str, float] = {}  # entry id -> size MB
        self.origin_objects: set[str] = set()
        self.cache_order: deque[str] = deque()  # evictable entries, FIFO
        self.run_queue: deque = deque()  # pending (invocation, dispatch_ms)
        self.busy_ms_accum = 0  # container-time: summed active phases
        self.compute_ms_accum = 0
        self.occupied_ms_accum = 0  # wall-clock time with >= 1 busy container
        self._occupied_since = 0
        self.dispatched = 0

    def free_mem(self) -> int:
        return self.mem_capacity - self.mem_used

    def store_free(self) -> float:
        return self.store_capacity - self.store_used

    def warm_idle_count(self, function: str) -> int:
        return len(self.warm_pool.get(function, ()))


def _code_key(function: str) -> str:
    return f"code:{function}"


class Cluster:
    """Owns nodes, the live object replica map, and the cost model."""

    def __init__(self, params: ClusterParams, functions: dict[str, FunctionSpec],
                 objects: list[DataObject] | None = None):
        if params.nodes < 1:
            raise SimulationError("cluster needs at least one node")
        self.params = params
        self.network = params.network
        self.functions = functions
        self.node_ids = list(range(params.nodes))
        self.nodes = {
            i: Node(i, params.mem_capacity, params.store_capacity) for i in self.node_ids
        }
        # Fresh replica state per run: catalog objects are cloned without placements.
        self.objects: dict[str, DataObject] = {
            o.id: DataObject(o.id, o.size) for o in (objects or [])
        }

    # ---- data placement -------------------------------------------------

    def place_object(self, object_id: str, node_id: int, origin: bool = False) -> PlacementOutcome:
        """Add a replica if store capacity permits; never evicts.

        Idempotent for an already-present replica. NO_CAPACITY tells the
        caller (replication) to skip or evict on its own terms.
        """
        obj = self.objects.get(object_id)
        if obj is None:
            raise UnknownObjectError(object_id)
        node = self.nodes.get(node_id)
        if node is None:
            raise UnknownNodeError(str(node_id))
        if object_id in node.store_entries:
            return PlacementOutcome.ALREADY_PRESENT
        if node.store_used + obj.size > node.store_capacity:
            return PlacementOutcome.NO_CAPACITY
        self._store_add(node, object_id, obj.size, evictable=not origin)
        obj.placements.add(node_id)
        if origin:
            obj.origin = node_id
            node.origin_objects.add(object_id)
        return PlacementOutcome.PLACED

    def ingest_origin(self, object_id: str, node_id: int) -> None:
        """Place the origin replica; failure to fit is a setup error."""
        outcome = self.place_object(object_id, node_id, origin=True)
        if outcome is PlacementOutcome.NO_CAPACITY:
            raise SimulationError(
                f"origin replica of {object_id} does not fit on node {node_id}"
            )

    def cache_object(self, object_id: str, node_id: int) -> bool:
        """Write-through cache of a fetched object, FIFO-evicting non-origin
        replicas to make room. Returns False when it cannot fit."""
        obj = self.objects[object_id]
        node = self.nodes[node_id]
        if object_id in node.store_entries:
            return True
        if not self._make_room(node, obj.size):
            return False
        self._store_add(node, object_id, obj.size, evictable=True)
        obj.placements.add(node_id)
        return True

    def _cache_code(self, function: str, size: float, node: Node) -> None:
        key = _code_key(function)
        if key in node.store_entries or size <= 0:
            return
        if self._make_room(node, size):
            self._store_add(node, key, size, evictable=True)

    def _store_add(self, node: Node, entry_id: str, size: float, evictable: bool) -> None:
        node.store_entries[entry_id] = size
        node.store_used += size
        if evictable:
            node.cache_order.append(entry_id)

    def _make_room(self, node: Node, size: float) -> bool:
        while node.store_free() < size and node.cache_order:
            victim = node.cache_order.popleft()
            node.store_used -= node.store_entries.pop(victim)
            obj = self.objects.get(victim)
            if obj is not None:
                obj.placements.discard(node.id)
        return node.store_free() >= size

    # ---- locality and transfer costs ------------------------------------

    def locality_fraction(self, data_refs, node_id: int) -> float:
        """Fraction of referenced bytes with a replica on the node; 1.0 for
        an empty reference set."""
        if node_id not in self.nodes:
            raise UnknownNodeError(str(node_id))
        total = 0.0
        local = 0.0
        for ref in data_refs:
            obj = self.objects.get(ref)
            if obj is None:
                raise UnknownObjectError(ref)
            total += obj.size
            if node_id in obj.placements:
                local += obj.size
        if total == 0.0:
            return 1.0
        return local / total

    def transfer_time(self, size_mb: float, remote: bool) -> int:
        return self.network.transfer_time(size_mb, remote)

    # ---- container lifecycle --------------------------------------------

    def acquire_container(self, node_id: int, function: str, now: int = 0):
        """Warm hit if an idle container exists, else cold start if memory
        permits, else rejection (the invocation stays queued)."""
        node = self.nodes[node_id]
        pool = node.warm_pool.get(function)
        if pool:
            container = pool.pop()
            container.busy = True
            self._mark_busy(node, now)
            if container.expiry_handle is not None:
                container.expiry_handle.cancel()
                container.expiry_handle = None
            return AcquireOutcome.WARM_HIT, container
        spec = self.functions[function]
        if spec.flavor <= node.free_mem():
            node.mem_used += spec.flavor
            self._mark_busy(node, now)
            if node.mem_used > node.mem_capacity:
                raise SimulationError(f"memory over-commit on node {node_id}")
            return AcquireOutcome.COLD_START, Container(function, node_id, spec.flavor)
        return AcquireOutcome.REJECTED, None

    def release_container(self, container: Container, now: int = 0) -> None:
        """Busy -> warm-idle; the caller schedules the keep-alive expiry."""
        node = self.nodes[container.node]
        container.busy = False
        node.busy_count -= 1
        if node.busy_count == 0:
            node.occupied_ms_accum += now - node._occupied_since
        node.warm_pool.setdefault(container.function, []).append(container)

    @staticmethod
    def _mark_busy(node: Node, now: int) -> None:
        if node.busy_count == 0:
            node._occupied_since = now
        node.busy_count += 1

    def expire_container(self, container: Container) -> int:
        """Reclaim an idle container's memory at keep-alive expiry."""
        if container.busy:
            return 0  # reused before the tombstone was cancelled; nothing to free
        node = self.nodes[container.node]
        pool = node.warm_pool.get(container.function, [])
        if container in pool:
            pool.remove(container)
            node.mem_used -= container.flavor
            return container.flavor
        return 0

    # ---- invocation execution -------------------------------------------

    def simulate_invocation(self, inv, node_id: int, cold: bool, dispatch_ms: int,
                            queue_wait_ms: int) -> tuple[PhaseTimeline, bool]:
        """Compute the phase timeline for an invocation that has just
        acquired a container on ``node_id``.

        Overheads: boot and code fetch apply only to cold starts (code is
        pulled from the code store unless already cached on the node); each
        referenced object without a local replica is fetched sequentially
        and written through into the node store. Returns (timeline, failed)
        where failed means the active time hit the execution cap; capped
        executions occupy the node for exactly the cap.
        """
        node = self.nodes[node_id]
        spec = self.functions[inv.function]

        boot = 0 if not cold else self.params.container_boot_ms
        code_fetch = 0
        if cold and spec.code_size > 0:
            code_local = (
                _code_key(inv.function) in node.store_entries
                or self.params.code_store == node_id
            )
            code_fetch = self.transfer_time(spec.code_size, remote=not code_local)
            if not code_local:
                self._cache_code(inv.function, spec.code_size, node)

        data_fetch = 0
        for ref in inv.data_refs:
            obj = self.objects.get(ref)
            if obj is None:
                raise UnknownObjectError(ref)
            if node_id not in obj.placements:
                data_fetch += self.transfer_time(obj.size, remote=True)
                self.cache_object(ref, node_id)

        compute = spec.compute_ms
        write_back = 0
        if spec.write_back > 0:
            write_back = self.transfer_time(
                spec.write_back, remote=self.params.result_store != node_id
            )

        cap = self.params.max_execution_ms
        active = boot + code_fetch + data_fetch + compute + write_back
        failed = active > cap
        if failed:
            boot, code_fetch, data_fetch, compute, write_back = _truncate_at(
                (boot, code_fetch, data_fetch, compute, write_back), cap
            )
            active = cap

        started_at = inv.arrival
        exec_start = started_at + dispatch_ms + queue_wait_ms
        timeline = PhaseTimeline(
            dispatch_ms=dispatch_ms,
            queue_wait_ms=queue_wait_ms,
            boot_ms=boot,
            code_fetch_ms=code_fetch,
            data_fetch_ms=data_fetch,
            compute_ms=compute,
            write_back_ms=write_back,
            started_at=started_at,
            finished_at=exec_start + active,
        )
        node.busy_ms_accum += active
        node.compute_ms_accum += compute
        return timeline, failed

    # ---- diagnostics -----------------------------------------------------

    def check_invariants(self) -> None:
        """Raise if per-node capacity accounting is inconsistent."""
        for node in self.nodes.values():
            warm_sum = sum(
                c.flavor for pool in node.warm_pool.values() for c in pool
            )
            busy_flavor = node.mem_used - warm_sum
            if node.mem_used > node.mem_capacity or busy_flavor < 0:
                raise SimulationError(f"memory accounting broken on node {node.id}")
            if node.store_used - sum(node.store_entries.values()) > 1e-9:
                raise SimulationError(f"store accounting broken on node {node.id}")
            if node.store_used > node.store_capacity + 1e-9:
                raise SimulationError(f"store over capacity on node {node.id}")


def _truncate_at(phases: tuple[int, ...], cap: int) -> tuple[int, ...]:
    """Cut a phase sequence off once the running total reaches the cap."""
    out = []
    left = cap
    for p in phases:
        take = min(p, left)
        out.append(take)
        left -= take
    return tuple(out)
