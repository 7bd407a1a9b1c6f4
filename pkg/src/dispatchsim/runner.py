"""Binds engine, cluster, workload and strategy into one deterministic run.

Event flow per invocation: at arrival the strategy picks a node; after the
strategy's dispatch latency the invocation is offered to that node, where
it either acquires a container (warm or cold) and starts, or waits in the
node's FIFO run queue until a completion or keep-alive expiry frees
resources. Optional periodic passes drive work stealing and popularity
replication. A run drains completely, so every dispatched invocation is
recorded exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cluster import AcquireOutcome, Cluster, Container
from .config import Scenario, StrategyConfig
from .engine import Engine, RandomSource
from .errors import SimulationError
from .metrics import (
    COMPLETED,
    FAILED,
    TaskRecord,
    aggregate_rows,
    billed_gb_seconds,
    summarize_run,
)
from .strategies import ClusterView, DispatchStrategy, make_strategy, replication_tick, steal_work
from .workload import Catalog, Invocation, build_catalog, generate_trace, load_trace


@dataclass
class RunResult:
    """Everything one (strategy, seed) run produced."""

    strategy: str
    seed: int
    records: list[TaskRecord]
    horizon_ms: int
    elapsed_ms: int
    compute_ms_total: int
    busy_ms_total: int
    occupied_ms_total: int
    node_count: int
    replications: int
    steals: int
    replication_log: list = field(default_factory=list)
    dispatch_counts: dict[int, int] = field(default_factory=dict)

    @property
    def makespan_ms(self) -> int:
        if not self.records:
            return 0
        first = min(r.timeline.started_at for r in self.records)
        last = max(r.timeline.finished_at for r in self.records)
        return last - first

    def row(self) -> dict:
        return summarize_run(
            self.strategy, self.seed, self.records,
            self.compute_ms_total, self.busy_ms_total,
            self.occupied_ms_total, self.node_count, self.elapsed_ms,
            self.replications, self.steals,
        )


class Simulation:
    """One engine run of a trace against a cluster under a strategy."""

    def __init__(self, engine: Engine, cluster: Cluster, strategy: DispatchStrategy,
                 trace: list[Invocation], catalog: Catalog, *,
                 horizon_ms: int,
                 keep_alive_ms: int | None = None,
                 work_stealing: bool = False,
                 steal_poll_ms: int = 10,
                 replication_period_ms: int = 1000,
                 replication_threshold: float = 10.0,
                 steal_rng: RandomSource | None = None):
        self.engine = engine
        self.cluster = cluster
        self.strategy = strategy
        self.trace = trace
        self.catalog = catalog
        self.horizon_ms = horizon_ms
        self.keep_alive_ms = (
            cluster.params.keep_alive_ms if keep_alive_ms is None else keep_alive_ms
        )
        self.work_stealing = work_stealing
        self.steal_poll_ms = steal_poll_ms
        self.replication_period_ms = replication_period_ms
        self.replication_threshold = replication_threshold
        self.steal_rng = steal_rng or RandomSource(0, "steal")
        self.view = ClusterView(cluster)
        self.records: list[TaskRecord] = []
        self.steals = 0
        self.replications = 0
        self.replication_log: list = []
        self.arrived = 0
        self.done = 0
        self.last_completion = 0

    # ---- run loop ---------------------------------------------------------

    def run(self) -> None:
        for inv in self.trace:
            self.engine.schedule(inv.arrival, self._arrival_handler(inv), f"arrival:{inv.id}")
        if self.work_stealing and self.trace:
            self.engine.schedule(self.steal_poll_ms, self._steal_tick, "steal-tick")
        if self.strategy.needs_replication and self.trace:
            self.engine.schedule(
                self.replication_period_ms, self._replication_tick, "replication-tick"
            )
        self.engine.run()
        if self.done != len(self.trace):
            raise SimulationError(
                f"run ended with {len(self.trace) - self.done} invocations unaccounted"
            )

    def _work_remaining(self) -> bool:
        return self.arrived < len(self.trace) or self.done < self.arrived

    # ---- handlers ---------------------------------------------------------

    def _arrival_handler(self, inv: Invocation):
        def handle():
            self.arrived += 1
            decision = self.strategy.decide(inv, self.view)
            node = self.cluster.nodes[decision.node]
            node.dispatched += 1
            self.engine.schedule(
                self.engine.now() + decision.dispatch_latency_ms,
                lambda: self._offer(inv, node.id, decision.dispatch_latency_ms),
                f"offer:{inv.id}",
            )
        return handle

    def _offer(self, inv: Invocation, node_id: int, dispatch_ms: int) -> None:
        if not self._try_start(inv, node_id, dispatch_ms):
            self.cluster.nodes[node_id].run_queue.append((inv, dispatch_ms))

    def _try_start(self, inv: Invocation, node_id: int, dispatch_ms: int) -> bool:
        outcome, container = self.cluster.acquire_container(
            node_id, inv.function, self.engine.now()
        )
        if outcome is AcquireOutcome.REJECTED:
            return False
        now = self.engine.now()
        queue_wait = now - (inv.arrival + dispatch_ms)
        timeline, failed = self.cluster.simulate_invocation(
            inv, node_id, cold=outcome is AcquireOutcome.COLD_START,
            dispatch_ms=dispatch_ms, queue_wait_ms=queue_wait,
        )
        self.engine.schedule(
            timeline.finished_at,
            lambda: self._complete(inv, container, timeline, failed),
            f"completion:{inv.id}",
        )
        return True

    def _complete(self, inv: Invocation, container: Container, timeline, failed: bool) -> None:
        if timeline.actual_ms() != timeline.phase_sum():
            raise SimulationError(f"phase accounting broken for {inv.id}")
        self.cluster.release_container(container, self.engine.now())
        container.expiry_handle = self.engine.schedule(
            self.engine.now() + self.keep_alive_ms,
            lambda: self._expire(container),
            f"keep-alive-expiry:{container.node}:{container.function}",
        )
        spec = self.catalog.functions[inv.function]
        self.records.append(TaskRecord(
            invocation_id=inv.id,
            function=inv.function,
            node=container.node,
            timeline=timeline,
            ideal_ms=spec.compute_ms,
            billed_gb_s=(
                billed_gb_seconds(timeline, spec.flavor,
                                  self.cluster.params.billing_granularity_ms)
                if not failed else 0.0
            ),
            status=FAILED if failed else COMPLETED,
        ))
        self.done += 1
        self.last_completion = max(self.last_completion, timeline.finished_at)
        self._drain(container.node)

    def _expire(self, container: Container) -> None:
        freed = self.cluster.expire_container(container)
        if freed:
            self._drain(container.node)

    def _drain(self, node_id: int) -> None:
        queue = self.cluster.nodes[node_id].run_queue
        while queue:
            inv, dispatch_ms = queue[0]
            if not self._try_start(inv, node_id, dispatch_ms):
                break  # strict FIFO: the head blocks until resources free up
            queue.popleft()

    def _steal_tick(self) -> None:
        for node_id in self.cluster.node_ids:
            if self.cluster.nodes[node_id].run_queue:
                continue
            batch = steal_work(self.cluster, node_id, self.steal_rng)
            if batch:
                self.steals += len(batch)
                self._drain(node_id)
        if self._work_remaining():
            self.engine.schedule(
                self.engine.now() + self.steal_poll_ms, self._steal_tick, "steal-tick"
            )

    def _replication_tick(self) -> None:
        actions = replication_tick(
            self.strategy.counters, self.cluster, self.replication_threshold
        )
        for action in actions:
            self.replication_log.append((self.engine.now(), action))
            if action.placed:
                self.replications += 1
        if self._work_remaining():
            self.engine.schedule(
                self.engine.now() + self.replication_period_ms,
                self._replication_tick, "replication-tick",
            )

    # ---- results ----------------------------------------------------------

    def result(self, strategy_label: str, seed: int) -> RunResult:
        nodes = self.cluster.nodes.values()
        return RunResult(
            strategy=strategy_label,
            seed=seed,
            records=self.records,
            horizon_ms=self.horizon_ms,
            elapsed_ms=max(self.horizon_ms, self.last_completion),
            compute_ms_total=sum(n.compute_ms_accum for n in nodes),
            busy_ms_total=sum(n.busy_ms_accum for n in nodes),
            occupied_ms_total=sum(n.occupied_ms_accum for n in nodes),
            node_count=len(nodes),
            replications=self.replications,
            steals=self.steals,
            replication_log=self.replication_log,
            dispatch_counts={n.id: n.dispatched for n in nodes},
        )


# ---- scenario-level entry points --------------------------------------------


def prepare_workload(scenario: Scenario, seed: int) -> tuple[Catalog, list[Invocation]]:
    """Build the catalogs and the invocation trace for one seed. Catalog
    draws and trace draws use distinct streams of the same seed, so every
    strategy compared under that seed sees the identical workload."""
    catalog = build_catalog(scenario.workload, RandomSource(seed, "catalog"))
    if scenario.workload.trace_path:
        trace = load_trace(scenario.workload.trace_path, catalog)
    else:
        trace = generate_trace(scenario.workload, catalog, RandomSource(seed, "trace"))
    return catalog, trace


def build_cluster(scenario: Scenario, catalog: Catalog) -> Cluster:
    """Fresh cluster with one origin replica per object, assigned round
    robin over the nodes in object id order."""
    cluster = Cluster(scenario.cluster, catalog.functions, list(catalog.objects.values()))
    for i, object_id in enumerate(catalog.objects):
        cluster.ingest_origin(object_id, cluster.node_ids[i % len(cluster.node_ids)])
    return cluster


def run_one(scenario: Scenario, strategy_cfg: StrategyConfig, seed: int,
            catalog: Catalog | None = None,
            trace: list[Invocation] | None = None,
            label: str | None = None) -> RunResult:
    """Run one (strategy, seed) pair to completion and collect results."""
    if catalog is None or trace is None:
        catalog, trace = prepare_workload(scenario, seed)
    cluster = build_cluster(scenario, catalog)
    strategy = make_strategy(
        strategy_cfg.name, strategy_cfg.params, strategy_cfg.dispatch_latency_ms
    )
    if strategy.needs_replication:
        strategy.counters.decay = strategy_cfg.replication_decay
    sim = Simulation(
        Engine(), cluster, strategy, trace, catalog,
        horizon_ms=scenario.workload.horizon_ms,
        work_stealing=strategy_cfg.work_stealing,
        steal_poll_ms=strategy_cfg.steal_poll_ms,
        replication_period_ms=strategy_cfg.replication_period_ms,
        replication_threshold=strategy_cfg.replication_threshold,
        steal_rng=RandomSource(seed, "steal"),
    )
    sim.run()
    cluster.check_invariants()
    return sim.result(strategy_cfg.label if label is None else label, seed)


def _unique_labels(strategies: list[StrategyConfig]) -> list[str]:
    labels, seen = [], {}
    for cfg in strategies:
        base = cfg.label
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return labels


def run_scenario(scenario: Scenario) -> list[RunResult]:
    """One engine run per (strategy, seed); strategies within a seed share
    the identical trace, so multi-strategy scenarios are paired."""
    labels = _unique_labels(scenario.strategies)
    results: list[RunResult] = []
    for seed in scenario.seeds:
        catalog, trace = prepare_workload(scenario, seed)
        for strategy_cfg, label in zip(scenario.strategies, labels):
            results.append(run_one(scenario, strategy_cfg, seed, catalog, trace, label))
    return results


def compare_scenario(scenario: Scenario) -> tuple[list[RunResult], list[dict]]:
    """run_scenario plus one mean row per strategy over its seeds."""
    results = run_scenario(scenario)
    rows = [r.row() for r in results]
    aggregates = [
        aggregate_rows(label, [row for row in rows if row["strategy"] == label])
        for label in _unique_labels(scenario.strategies)
    ]
    return results, rows + aggregates
