"""
Signal strength recovers a Gaussian graph
=========================================

For N(0, Sigma) the log-density Hessian is the constant -inv(Sigma), so the
population signal strength of pair (j, l) is inv(Sigma)[j, l] ** 2. The
estimate comes from squared partial derivatives of the fitted score. It is
reported on the standardized data scale, so compare orderings, not values.
"""
import numpy as np

from ngm.datagen import erdos_renyi, precision_from_support
from ngm.graph import omega
from ngm.score import FitConfig, fit, median_kernel
from ngm.selection import cv_lambda, kfold_split

rng = np.random.default_rng(0)
d = 8
theta = precision_from_support(erdos_renyi(d, 0.25, rng))
X = rng.multivariate_normal(np.zeros(d), np.linalg.inv(theta), size=500)
B = np.zeros((500, 1))

kernel = median_kernel(X, B, sigma_b=1.0)
lam = cv_lambda(X, B, kernel, np.logspace(-4, 0, 7), kfold_split(500, 5, 0)).best
field = omega(fit(X, B, FitConfig(lam, kernel)), B[:1])

iu = np.triu_indices(d, k=1)
est = field.matrices[0][iu]
true = theta[iu] ** 2
order = np.argsort(est)[::-1]
print(" pair     estimate   truth")
for k in order:
    mark = "*" if true[k] > 0 else " "
    print(f"({iu[0][k]},{iu[1][k]})  {est[k]:10.4f}  {true[k]:.4f} {mark}")
print("\nstarred pairs are true edges; they should sit at the top")
