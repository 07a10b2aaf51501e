"""
Softmax on a zero-sum ball
==========================

How small can a softmax coordinate get when the input has zero mean and
norm at most rho, and how does the Jacobian spectrum sit between the
smallest and largest output?
"""

import numpy as np

from vectro.softmax import (jacobian_softmax, lipschitz_constants, softmax, softmax_extrema,
                            spectrum_report)

print(f"{'D':>3} {'rho':>5} {'min sigma':>12} {'max sigma':>12} {'Lip(softmax)':>13}")
for D in (2, 5, 20):
    for rho in (0.5, 2.0, 5.0):
        ex = softmax_extrema(D, rho)
        lip = lipschitz_constants(rho, D)
        print(f"{D:>3} {rho:>5} {ex.min_value:>12.6g} {ex.max_value:>12.6g} {lip.softmax_lip:>13.5g}")

# the closed-form minimiser really attains the minimum
ex = softmax_extrema(5, 2.0)
print("\nargmin point:", np.round(ex.argmin_point, 4), " sum =", round(ex.argmin_point.sum(), 12))
print("softmax there:", np.round(softmax(ex.argmin_point), 5))

# spectrum of the Jacobian restricted to the zero-sum subspace
rng = np.random.default_rng(0)
u = rng.standard_normal(6)
u -= u.mean()
rep = spectrum_report(u)
print(f"\nD * min(sigma)^2 = {rep.lower_env:.5f}")
print(f"lambda_min       = {rep.lambda_min_exact:.5f}")
print(f"lambda_max       = {rep.lambda_max_exact:.5f}")
print(f"D * max(sigma)^2 = {rep.upper_env:.5f}")
print("ones direction is in the kernel:", abs(rep.kernel_value) < 1e-15)
print("full Jacobian eigenvalues:", np.round(np.linalg.eigvalsh(jacobian_softmax(u)), 5))
