"""The inner maximization over an lp ball has an exact solution.

For a linear score y * theta.x the loss-maximizing perturbation moves the
input by epsilon along a (negated) subgradient of the dual q-norm, which
costs exactly epsilon * ||theta||_q of margin.  No attack iterations are
involved.  This script checks the closed form against random feasible
perturbations for three threat models.
"""

import numpy as np

from advlab import PerturbationModel, lp_norm, worst_case_perturbation

rng = np.random.default_rng(1)
d = 12
theta = rng.normal(size=d)
x = rng.normal(size=d)
y = 1

for p in (2.0, np.inf, 1.5):
    model = PerturbationModel(p=p, epsilon=0.25)
    print(f"threat model: p={p}, epsilon={model.epsilon}, dual q={model.q:.3f}")

    u = worst_case_perturbation(theta, y, model)
    drop = y * theta @ x - y * theta @ (x + u)
    print(f"  closed-form margin drop  = {drop:.10f}")
    print(f"  epsilon * ||theta||_q    = {model.epsilon * lp_norm(theta, model.q):.10f}")
    print(f"  attack norm ||u||_p      = {lp_norm(u, p):.10f} (budget {model.epsilon})")

    # no random feasible point does better
    probes = rng.normal(size=(100_000, d))
    if np.isinf(p):
        norms = np.abs(probes).max(axis=1)
    else:
        norms = (np.abs(probes) ** p).sum(axis=1) ** (1.0 / p)
    probes *= (model.epsilon / norms)[:, None]
    best = float((-y * probes @ theta).max())
    print(f"  best of 1e5 random probes = {best:.10f}\n")
