"""
Posterior shrinkage under one-group priors
==========================================

How much a count is pulled toward the null mean depends on the prior
family and on the global scale tau.  Small counts are shrunk almost
completely; large counts escape.
"""

import numpy as np

from sparsecount import make_gdp, make_tpbn, GaussHypergeometricPrior, posterior_shrinkage

alpha = 1.5
ys = np.arange(0, 31, 3)

priors = {
    "TPBN(1.5,1.5)": make_tpbn(1.5, 1.5),
    "horseshoe GH(.5,.5,1)": GaussHypergeometricPrior(0.5, 0.5, 1.0),
    "GDP(3,1)": make_gdp(3.0, 1.0),
}

###############################################################################
# E(1 - kappa | y) for each prior at tau = 0.05

tau = 0.05
print(f"E(1 - kappa | y), alpha={alpha}, tau={tau}")
print("y".rjust(4) + "".join(name.rjust(24) for name in priors))
for y in ys:
    row = [posterior_shrinkage(pr, alpha, int(y), tau).e_one_minus_kappa
           for pr in priors.values()]
    print(f"{y:4d}" + "".join(f"{v:24.4f}" for v in row))

###############################################################################
# Smaller tau shrinks a small count hard; a large count barely moves

tpbn = priors["TPBN(1.5,1.5)"]
for y in (3, 10):
    print(f"\nTPBN, y={y}")
    for tau in (0.5, 0.1, 0.01, 0.001):
        est = posterior_shrinkage(tpbn, alpha, y, tau)
        print(f"  tau={tau:<6g} E(theta|y)={est.e_theta:8.4f}  method={est.method.value}")
