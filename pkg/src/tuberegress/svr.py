"""Epsilon-SVR trained by sequential minimal optimization.

The dual is solved in the usual 2n-variable form: for each training row i
there is a pair (alpha_i, alpha*_i) in [0, C], stacked as one vector ``a`` of
length 2n with signs ``s = (+1, ..., +1, -1, ..., -1)``. With
``beta = alpha - alpha*`` the (minimised) objective is

    0.5 * beta' K beta + eps * sum(alpha + alpha*) - y' beta

subject to ``sum(beta) = 0``. The solver keeps ``u = K beta`` up to date, so
the gradient of variable t is ``s_t * u[t mod n] + eps - s_t * y[t mod n]``.

Working-set selection is the maximal-violating-pair rule with second-order
choice of the partner (Fan, Chen & Lin, JMLR 2005).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DimensionMismatch, MaxIterationsExceeded, NonFiniteInput
from .kernel import KernelCache, KernelSpec, _cache_get, _k, kernel_matrix, resolve

TAU = 1e-12
HARD_ITER_CAP = 10_000_000


@dataclass(frozen=True)
class SvrParams:
    C: float = 1.0
    epsilon: float = 0.1
    kernel: KernelSpec = field(default_factory=KernelSpec)
    tol: float = 1e-3
    max_iter: int | None = None
    shrinking: bool = True
    cache_mb: float = 500

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be > 0")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")

    def as_dict(self):
        return {
            "C": self.C,
            "epsilon": self.epsilon,
            "kernel": self.kernel.as_dict(),
            "tol": self.tol,
            "max_iter": self.max_iter,
            "shrinking": self.shrinking,
            "cache_mb": self.cache_mb,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["kernel"] = KernelSpec(**d["kernel"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SvrModel:
    """A fitted epsilon-SVR.

    ``support_index`` are the training-row positions of the support vectors
    (rows with nonzero ``beta``), ``n_train`` the training size, so the full
    dual vector can be rebuilt for auditing.
    """

    params: SvrParams
    kernel: KernelSpec  # gamma resolved
    support_vectors: np.ndarray
    beta: np.ndarray
    b: float
    support_index: np.ndarray
    n_train: int
    dual_objective: float
    n_iterations: int
    converged: bool = True
    objective_trace: np.ndarray | None = None

    def predict(self, X) -> np.ndarray:
        return svr_predict(self, X)

    def full_beta(self) -> np.ndarray:
        out = np.zeros(self.n_train)
        out[self.support_index] = self.beta
        return out

    def to_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "resolved_gamma": self.kernel.gamma,
            "beta": self.beta.tolist(),
            "support_rows": self.support_vectors.tolist(),
            "support_index": self.support_index.tolist(),
            "n_train": self.n_train,
            "b": self.b,
            "dual_objective": self.dual_objective,
            "n_iterations": self.n_iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d) -> "SvrModel":
        params = SvrParams.from_dict(d["params"])
        kspec = KernelSpec(params.kernel.kind, d["resolved_gamma"], params.kernel.coef0, params.kernel.degree)
        sv = np.asarray(d["support_rows"], dtype=float)
        return cls(
            params=params,
            kernel=kspec,
            support_vectors=sv.reshape(len(d["beta"]), -1) if sv.size else sv.reshape(0, 0),
            beta=np.asarray(d["beta"], dtype=float),
            b=float(d["b"]),
            support_index=np.asarray(d["support_index"], dtype=np.int64),
            n_train=int(d["n_train"]),
            dual_objective=float(d["dual_objective"]),
            n_iterations=int(d["n_iterations"]),
            converged=bool(d["converged"]),
        )


@numba.njit(cache=True, nogil=True)
def _grad(t, n, u, y, eps):
    k = t if t < n else t - n
    if t < n:
        return u[k] + eps - y[k]
    return -u[k] + eps + y[k]


@numba.njit(cache=True, nogil=True)
def _in_up(t, n, a, C):
    return a[t] < C if t < n else a[t] > 0


@numba.njit(cache=True, nogil=True)
def _in_low(t, n, a, C):
    return a[t] > 0 if t < n else a[t] < C


@numba.njit(cache=True, nogil=True)
def _max_violations(n, a, u, y, eps, C, active):
    """(m, -M): max of -sG over I_up and max of sG over I_low."""
    g1 = -np.inf
    g2 = -np.inf
    for t in range(2 * n):
        if not active[t]:
            continue
        s = 1.0 if t < n else -1.0
        G = _grad(t, n, u, y, eps)
        if _in_up(t, n, a, C) and -s * G > g1:
            g1 = -s * G
        if _in_low(t, n, a, C) and s * G > g2:
            g2 = s * G
    return g1, g2


@numba.njit(cache=True, nogil=True)
def _smo(X, y, C, eps, tol, max_iter, shrinking, record,
         kind, gamma, coef0, degree, data, slot_of, owner, stamp, state):
    n = X.shape[0]
    L = 2 * n
    a = np.zeros(L)
    u = np.zeros(n)
    active = np.ones(L, dtype=np.bool_)
    n_active = L
    diag = np.empty(n)
    for k in range(n):
        diag[k] = _k(X[k], X[k], kind, gamma, coef0, degree)
    obj = 0.0
    trace = [obj]
    shrink_every = min(L, 1000)
    countdown = shrink_every
    unshrunk = False
    it = 0
    converged = False
    while it < max_iter:
        # periodic shrinking of bound variables that cannot re-enter soon
        if shrinking:
            countdown -= 1
            if countdown <= 0:
                countdown = shrink_every
                g1, g2 = _max_violations(n, a, u, y, eps, C, active)
                if not unshrunk and g1 + g2 <= 10 * tol:
                    unshrunk = True
                    for t in range(L):
                        active[t] = True
                    n_active = L
                for t in range(L):
                    if not active[t]:
                        continue
                    G = _grad(t, n, u, y, eps)
                    at_upper = a[t] >= C
                    at_lower = a[t] <= 0
                    if at_upper:
                        drop = (-G > g1) if t < n else (-G > g2)
                    elif at_lower:
                        drop = (G > g2) if t < n else (G > g1)
                    else:
                        drop = False
                    if drop:
                        active[t] = False
                        n_active -= 1

        # select i: maximal violator in I_up
        gmax = -np.inf
        i = -1
        for t in range(L):
            if not active[t]:
                continue
            if t < n:
                if a[t] < C:
                    g = -_grad(t, n, u, y, eps)
                    if g >= gmax:
                        gmax = g
                        i = t
            else:
                if a[t] > 0:
                    g = _grad(t, n, u, y, eps)
                    if g >= gmax:
                        gmax = g
                        i = t
        ki = -1
        si = -1
        if i >= 0:
            ki = i if i < n else i - n
            si = _cache_get(ki, X, kind, gamma, coef0, degree, data, slot_of, owner, stamp, state)
        # select j: second-order gain among I_low partners
        gmax2 = -np.inf
        j = -1
        best = np.inf
        for t in range(L):
            if not active[t]:
                continue
            kt = t if t < n else t - n
            G = _grad(t, n, u, y, eps)
            if t < n:
                if a[t] > 0:
                    diff = gmax + G
                    if G >= gmax2:
                        gmax2 = G
                else:
                    continue
            else:
                if a[t] < C:
                    diff = gmax - G
                    if -G >= gmax2:
                        gmax2 = -G
                else:
                    continue
            if i >= 0 and diff > 0:
                quad = diag[ki] + diag[kt] - 2.0 * data[si, kt]
                if quad <= 0:
                    quad = TAU
                gain = -(diff * diff) / quad
                if gain <= best:
                    best = gain
                    j = t
        if gmax + gmax2 < tol or j == -1:
            if n_active < L:
                for t in range(L):
                    active[t] = True
                n_active = L
                countdown = shrink_every
                continue
            converged = True
            break

        # two-variable update
        kj = j if j < n else j - n
        sj = _cache_get(kj, X, kind, gamma, coef0, degree, data, slot_of, owner, stamp, state)
        si = slot_of[ki]
        Kij = data[si, kj]
        yi = 1.0 if i < n else -1.0
        yj = 1.0 if j < n else -1.0
        Gi = _grad(i, n, u, y, eps)
        Gj = _grad(j, n, u, y, eps)
        old_i = a[i]
        old_j = a[j]
        quad = diag[ki] + diag[kj] - 2.0 * Kij
        if quad <= 0:
            quad = TAU
        if yi != yj:
            delta = (-Gi - Gj) / quad
            dif = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if dif > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = dif
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = -dif
            if dif > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - dif
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + dif
        else:
            delta = (Gi - Gj) / quad
            sm = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if sm > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = sm - C
            else:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = sm
            if sm > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = sm - C
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = sm
        di = a[i] - old_i
        dj = a[j] - old_j
        # objective change, exact for the quadratic in the two moved variables
        obj += Gi * di + Gj * dj + 0.5 * (diag[ki] * di * di + diag[kj] * dj * dj) + yi * yj * Kij * di * dj
        ci = yi * di
        cj = yj * dj
        for k in range(n):
            u[k] += ci * data[si, k] + cj * data[sj, k]
        it += 1
        if record:
            trace.append(obj)
    out = np.empty(len(trace))
    for t in range(len(trace)):
        out[t] = trace[t]
    return a, u, it, converged, obj, out


def _bias(a, u, y, eps, C):
    """Mean implied bias over free variables, else the feasible-interval midpoint."""
    n = len(y)
    s = np.concatenate([np.ones(n), -np.ones(n)])
    G = np.concatenate([u + eps - y, -u + eps + y])
    sG = s * G
    upper = a >= C
    lower = a <= 0
    free = ~(upper | lower)
    if free.any():
        rho = float(np.mean(sG[free]))
    else:
        ub_mask = (upper & (s < 0)) | (lower & (s > 0))
        lb_mask = (upper & (s > 0)) | (lower & (s < 0))
        ub = float(np.min(sG[ub_mask])) if ub_mask.any() else np.inf
        lb = float(np.max(sG[lb_mask])) if lb_mask.any() else -np.inf
        if not np.isfinite(ub):
            ub = lb
        if not np.isfinite(lb):
            lb = ub
        rho = (ub + lb) / 2
    return -rho


def svr_fit(X, y, params: SvrParams = SvrParams(), record_objective: bool = False) -> SvrModel:
    """Fit an epsilon-SVR by SMO.

    Stops when the maximal violating-pair gap drops below ``params.tol``.
    If ``max_iter`` (or the hard cap of 10**7 pair updates) is reached first,
    the current iterate is returned with ``converged=False`` and a
    :class:`MaxIterationsExceeded` warning.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch("X must be (n, d) with len(y) == n")
    if X.shape[0] < 1:
        raise ValueError("need at least one training row")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("X and y must be finite")
    kspec = resolve(params.kernel, X)
    cache = KernelCache(X, kspec, int(params.cache_mb * 2**20), min_rows=2)
    max_iter = HARD_ITER_CAP if params.max_iter is None else min(int(params.max_iter), HARD_ITER_CAP)
    C, eps = float(params.C), float(params.epsilon)
    a, u, n_iter, converged, obj, trace = _smo(
        X, y, C, eps, float(params.tol), max_iter, bool(params.shrinking), bool(record_objective),
        *cache.args[1:],
    )
    if not converged:
        warnings.warn(MaxIterationsExceeded(f"SMO stopped after {n_iter} iterations without converging"))
    n = len(y)
    beta = a[:n] - a[n:]
    sv = np.flatnonzero(beta != 0)
    # objective from the final iterate, not the running sum, to avoid drift
    dual = float(0.5 * beta @ u + eps * a.sum() - y @ beta)
    return SvrModel(
        params=params,
        kernel=kspec,
        support_vectors=X[sv].copy(),
        beta=beta[sv].copy(),
        b=float(_bias(a, u, y, eps, C)),
        support_index=sv,
        n_train=n,
        dual_objective=dual,
        n_iterations=int(n_iter),
        converged=bool(converged),
        objective_trace=trace if record_objective else None,
    )


def svr_predict(m: SvrModel, X, chunk: int = 2048) -> np.ndarray:
    """``f(x) = sum_i beta_i K(sv_i, x) + b`` for each row of ``X``."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("X must be 2-dimensional")
    if len(m.beta) == 0:
        return np.full(X.shape[0], m.b)
    if X.shape[1] != m.support_vectors.shape[1]:
        raise DimensionMismatch(f"model trained on {m.support_vectors.shape[1]} columns, got {X.shape[1]}")
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], chunk):
        K = kernel_matrix(m.kernel, X[start:start + chunk], m.support_vectors)
        out[start:start + chunk] = K @ m.beta + m.b
    return out


def dual_objective(beta, K, y, epsilon, alpha=None, alpha_star=None) -> float:
    """Minimised dual objective.

    Without explicit ``alpha``/``alpha_star`` the split ``alpha = max(beta, 0)``,
    ``alpha* = max(-beta, 0)`` is used, for which sum(alpha + alpha*) = sum|beta|.
    """
    beta = np.asarray(beta, dtype=float)
    if alpha is None:
        alpha, alpha_star = np.maximum(beta, 0), np.maximum(-beta, 0)
    return float(0.5 * beta @ K @ beta + epsilon * (np.sum(alpha) + np.sum(alpha_star)) - np.asarray(y) @ beta)


def kkt_violation(m_or_beta, X, y, params: SvrParams) -> float:
    """Largest optimality violation of a dual point.

    The maximum of: the maximal violating-pair gap (the stopping criterion),
    the box violation ``max(|beta| - C)``, and ``|sum(beta)|``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(m_or_beta, SvrModel):
        beta, kspec = m_or_beta.full_beta(), m_or_beta.kernel
    else:
        beta, kspec = np.asarray(m_or_beta, dtype=float), resolve(params.kernel, X)
    C, eps = params.C, params.epsilon
    u = kernel_matrix(kspec, X) @ beta
    a = np.concatenate([np.maximum(beta, 0), np.maximum(-beta, 0)])
    s = np.concatenate([np.ones(len(y)), -np.ones(len(y))])
    G = np.concatenate([u + eps - y, -u + eps + y])
    up = np.where(s > 0, a < C, a > 0)
    low = np.where(s > 0, a > 0, a < C)
    gap = 0.0
    if up.any() and low.any():
        gap = max(0.0, float(np.max(-s[up] * G[up]) - np.min(-s[low] * G[low])))
    box = float(np.max(np.abs(beta) - C, initial=0.0))
    return max(gap, box, abs(float(beta.sum())))


def save_model(m: SvrModel, path) -> None:
    import json

    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh)


def load_model(path) -> SvrModel:
    import json

    with open(path) as fh:
        return SvrModel.from_dict(json.load(fh))

