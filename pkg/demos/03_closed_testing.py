"""
Closed testing under a monotone order restriction
=================================================

A Williams test answers "is there any dose effect?".  Closed testing
turns it into one adjusted p-value per dose.  With a monotone
alternative the closure reduces to a chain: dose i is declared effective
only if every subset {0..j}, j >= i, is rejected.
"""

import numpy as np

from dosectp import build_closure_plan, ctp_cp, ctp_cw, dunnett_test, fit_groups

plan = build_closure_plan(3)
for i in range(1, 4):
    print(f"dose {i} must pass the subset tests with top doses {plan.chain(i)}")

rng = np.random.default_rng(7)
samples = [m + rng.normal(0, 1.0, 10) for m in (0.0, 0.2, 1.0, 1.4)]
fit = fit_groups(samples)

cw = ctp_cw(fit)
cp = ctp_cp(fit)
dunnett = dunnett_test(fit)

print(f"\n{'dose':<6}{'Dunnett':>10}{'CW':>10}{'CP':>10}")
for i in range(3, 0, -1):
    print(f"{i:<6}{dunnett.results[i - 1].adj_p:>10.2e}"
          f"{cw.elementary_adj_p[i]:>10.2e}{cp.elementary_adj_p[i]:>10.2e}")

# The subset p-values and their running maximum down the chain.
print("\nCW subset p:", {j: f"{p:.2e}" for j, p in cw.subset_p.items()})
print("CP subset p:", {j: f"{p:.2e}" for j, p in cp.subset_p.items()})
