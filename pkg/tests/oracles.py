"""Independent reference solutions shared by several test modules."""

import numpy as np

from tuberegress.kernel import KernelSpec
from tuberegress.svr import SvrParams, dual_objective


def qp_oracle(K, y, C, eps):
    """Solve the 2n-variable epsilon-SVR dual with an interior-point QP solver.

    Returns ``(beta, objective)``.
    """
    import cvxopt

    cvxopt.solvers.options.update(show_progress=False, abstol=1e-12, reltol=1e-12, feastol=1e-12, maxiters=200)
    n = len(y)
    P = np.block([[K, -K], [-K, K]]) + 1e-12 * np.eye(2 * n)
    q = eps * np.ones(2 * n) - np.concatenate([y, -y])
    G = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.concatenate([np.zeros(2 * n), C * np.ones(2 * n)])
    A = np.concatenate([np.ones(n), -np.ones(n)])[None, :]
    m = cvxopt.matrix
    sol = cvxopt.solvers.qp(m(P), m(q), m(G), m(h), m(A), m(np.zeros(1)))
    a = np.array(sol["x"]).ravel()
    beta = a[:n] - a[n:]
    return beta, dual_objective(beta, K, y, eps, a[:n], a[n:])


def random_problem(rng, tol=1e-8):
    """A small random SVR problem with n <= 5 rows and d <= 3 columns."""
    n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    X = rng.uniform(-2, 2, size=(n, d))
    y = rng.normal(size=n) * rng.uniform(0.2, 3)
    kind = str(rng.choice(["rbf", "linear"]))
    spec = KernelSpec(kind, float(rng.uniform(0.1, 2)))
    p = SvrParams(C=float(rng.uniform(0.05, 10)), epsilon=float(rng.uniform(0, 0.5)), kernel=spec, tol=tol)
    return X, y, p
