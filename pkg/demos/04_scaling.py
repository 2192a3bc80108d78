# Average latency of EO, SO, DADS and the budget game as the fleet grows.

from dds.sim import ScenarioConfig, compare, write_summary_csv

results = compare(ScenarioConfig(seed=0), [5, 25, 50, 100])
print(f"{'method':6s} {'N':>4s} {'T':>8s} {'Ts':>8s} {'Tt':>8s} {'Tl':>8s}")
for r in results:
    print(f"{r.method:6s} {r.n_devices:4d} {r.mean_T:8.4f} {r.mean_Ts:8.4f} {r.mean_Tt:8.4f} {r.mean_Tl:8.4f}")

by = {(r.n_devices, r.method): r for r in results}
for n in (5, 25, 50, 100):
    print(f"N={n:3d}: DDS/DADS = {by[(n, 'DDS')].mean_T / by[(n, 'DADS')].mean_T:.3f}")

write_summary_csv("summary.csv", results)
