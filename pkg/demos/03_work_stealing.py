"""Work stealing rescues a hash hotspot.

Hash-affinity dispatching sends every invocation of one function to one
node. With only one 128MB container slot per node, that node's queue grows
without bound while three neighbors idle. Turning on work stealing lets
the idle nodes pull the back half of a random victim's queue every poll;
stolen work pays its own cold starts and code fetches at the thief, yet
the makespan still collapses.
"""

from dispatchsim.config import parse_scenario
from dispatchsim.runner import run_one

HOT = {
    "cluster": {"nodes": 4, "mem_capacity": 128},
    "workload": {
        "horizon_ms": 2000,
        "arrival": {"kind": "fixed_interval", "interval_ms": 4},  # 500 events
        "functions": [{"name": "hot", "code_size": 1, "flavor": 128, "compute_ms": 60}],
    },
    "seeds": [1],
}

for stealing in (False, True):
    scenario = parse_scenario({
        **HOT, "strategy": {"name": "hash_affinity", "work_stealing": stealing},
    })
    result = run_one(scenario, scenario.strategies[0], 1)
    row = result.row()
    executed_on = sorted({r.node for r in result.records})
    print(f"work_stealing={str(stealing):<5}  makespan {result.makespan_ms:>6} ms, "
          f"mean actual {row['mean_actual_ms']:>8.1f} ms, "
          f"p95 {row['p95_actual_ms']:>8.1f} ms, "
          f"stolen {result.steals:>3}, executed on nodes {executed_on}")

print("\nNo invocation is lost or duplicated by stealing; the run simply"
      "\nspreads the queue across otherwise idle capacity.")
