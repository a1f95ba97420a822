"""Writes data/demo.csv and data/demo.truth.csv: a small confounded dataset
with a nonlinear outcome, a point mass at zero and known effects."""

import numpy as np

rng = np.random.default_rng(20)
n, d = 1000, 4
w = rng.normal(size=(n, d))
logit = 0.8 * w[:, 0] - 0.5 * w[:, 1] + 0.3 * w[:, 2] * w[:, 3]
e = 1.0 / (1.0 + np.exp(-logit))
t = (rng.random(n) < e).astype(int)
zero = 1.0 / (1.0 + np.exp(-(-1.5 + 0.5 * w[:, 1])))  # P(y = 0)
m0 = np.sin(1.5 * w[:, 0]) + 0.5 * w[:, 2] ** 2
m1 = m0 + 1.0 + 0.7 * np.tanh(w[:, 3])
cont = np.where(t == 1, m1, m0) + 0.4 * rng.normal(size=n)
y = np.where(rng.random(n) < zero, 0.0, cont)
mu0, mu1 = (1 - zero) * m0, (1 - zero) * m1

with open("data/demo.csv", "w") as f:
    f.write(",".join(f"w{j + 1}" for j in range(d)) + ",t,y\n")
    for i in range(n):
        f.write(",".join(repr(float(v)) for v in w[i]) + f",{t[i]},{float(y[i])!r}\n")
with open("data/demo.truth.csv", "w") as f:
    f.write("row,propensity,mu0,mu1,iate\n")
    for i in range(n):
        f.write(f"{i + 1},{float(e[i])!r},{float(mu0[i])!r},{float(mu1[i])!r},{float(mu1[i] - mu0[i])!r}\n")
    f.write(f"# ate={float(np.mean(mu1 - mu0))!r}\n")
