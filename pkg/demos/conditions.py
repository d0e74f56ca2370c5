"""Condition battery over the standard disorder families, and the chain 1 -> 2 -> 3."""

import numpy as np

from polymerlab import condition_lab as cl
from polymerlab.env_model import Gaussian

for r in cl.standard_battery() + cl.prop_battery():
    print(f"{r.condition_id:<9} {r.meta['family']:<15} {r.verdict}")

spec, beta = Gaussian(), 1.0
chain = cl.condition_chain(spec, beta)
print(f"\nchain for {spec} at beta={beta}: A3={chain['A3']:.4f} c3={chain['c3']:.2f}")
g = 0.25 ** np.arange(6)
r = cl.check_condition3(spec, beta, [np.array([1.0]), g / g.sum()], A_grid=(chain["A3"],),
                        replicas=200_000, seed=0, c3=chain["c3"])
print(r.table())
