"""Exact gaussian risks versus Monte Carlo estimates.

For a linear classifier on the gaussian mixture both risks reduce to
normal tail probabilities of the signal-to-noise ratio b = theta.mu /
||theta||_2, with the adversarial variant shifted by the normalized
penalty epsilon * ||theta||_q / ||theta||_2.  Monte Carlo draws fresh
labeled samples from a dedicated evaluation stream, so estimates never
reuse training randomness.
"""

import numpy as np

from advlab import (
    MixtureSpec,
    PerturbationModel,
    analytic_risk,
    monte_carlo_risk,
    mu_from_scaling,
)

# a weak mean keeps the tail probabilities off the noise floor
spec = MixtureSpec(d=100, mu=mu_from_scaling(100, 0.15), eta=0.1, seed=0)
rng = np.random.default_rng(5)

for label, theta in (
    ("theta = mu (best direction)", spec.mu.copy()),
    ("theta = mu + strong noise", spec.mu + rng.normal(size=100)),
):
    print(label)
    for p, eps in ((2.0, 0.2), (np.inf, 0.02)):
        model = PerturbationModel(p, eps)
        an = analytic_risk(theta, spec, model)
        mc = monte_carlo_risk(theta, spec, model, m=100_000, seed=1)
        print(
            f"  p={p:<4} eps={eps:<5} analytic std={an.std_risk:.4f} adv={an.adv_risk:.4f}"
            f" | mc std={mc.std_risk:.4f} adv={mc.adv_risk:.4f} (stderr {mc.mc_stderr:.4f})"
        )
    print()

# the best possible standard risk of any direction is eta plus a tail term
best = analytic_risk(spec.mu, spec, PerturbationModel(2.0, 0.0))
print(f"standard risk at theta=mu, eps=0: {best.std_risk:.4f} (floor is eta={spec.eta})")
