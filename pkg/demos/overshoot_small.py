"""Stopped-martingale overshoot at a scale one core can finish.

The full-size run (d=3, beta=0.3, horizon 200, 10^4 replicas) costs seconds
per replica; here d=1, beta=1 reaches every threshold within 60 steps.
"""

from polymerlab import condition_lab as cl
from polymerlab.env_model import Gaussian
from polymerlab.overshoot_lab import martingale_overshoot_experiment, simulate_convex_overshoot

spec, beta = Gaussian(), 1.0
chain = cl.condition_chain(spec, beta)
exp = martingale_overshoot_experiment(spec, beta, 1, t_grid=(2, 4, 8, 16), horizon=60, replicas=4000,
                                      seed=0, A3=chain["A3"], c3=chain["c3"])
print(f"verdict {exp.verdict}, completed {exp.completed}, max ratio {exp.max_ratio:.3f}")
print(f"bookkeeping gap {exp.bookkeeping_gap:.1e}, identity gap {exp.identity_gap:.1e}")
for t, p, ratio, lo, hi, hits in exp.aggregate:
    print(f"t={t:4g} p={p:3g}  ratio={ratio:.3f}  [{lo:.3f}, {hi:.3f}]  hits={hits}")

print("\nconvex combination of i.i.d. Y, uniform weights over 8 sites")
for s in simulate_convex_overshoot(spec, beta, [1 / 8] * 8, A_grid=(1.0, 2.0), replicas=200_000, seed=1):
    print(f"A={s.A:g} p={s.p:g}  ratio={s.ratio.value:.3f}  N=0 part={s.split['N=0']:.3f}  "
          f"E[N|N>=1]={s.N_moments.mean_N_given.value:.3f}  truncation violations={s.truncation_violations}")
