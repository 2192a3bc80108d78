# 100 devices settle on one price regardless of where budgets start.

from dds.sim import ScenarioConfig, convergence_study, write_convergence_csv

cfg = ScenarioConfig(n_devices=100, seed=0)
study = convergence_study(cfg, [0.0, 0.01, 0.05, 0.1])

for a0, res in study.items():
    head = " ".join(f"{x:.2f}" for x in res.price_series[:6])
    print(f"a0={a0:<5} A: {head} ... {res.final_A:.3f}  "
          f"({'converged' if res.converged else 'not converged'} in {res.iterations} rounds)")

participants = sum(d.a > 0 for d in study[0.0].devices)
print(f"{participants} of {cfg.n_devices} devices buy server time at equilibrium")

write_convergence_csv("convergence.csv", study)
print("wrote convergence.csv")
