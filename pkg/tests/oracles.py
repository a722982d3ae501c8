"""Independent reference implementations used to pin expected test values.

Everything here deliberately avoids the library's solution paths: the QP
oracle enumerates active sets over a dense Hessian, the AUC oracle counts
ordered pairs, and derivatives come from central finite differences.
"""

import itertools

import numpy as np


def active_set_qp_oracle(hessian, linear, lower, upper=None, tol=1e-9):
    """Global minimizer of 1/2 x'Ax + b'x over a box by active-set enumeration.

    Tries every assignment of variables to {at lower, free, at upper}, solves
    the equality-constrained system on the free set, and keeps the feasible
    KKT point with the smallest objective.
    """
    hessian = np.asarray(hessian, dtype=float)
    linear = np.asarray(linear, dtype=float)
    lower = np.asarray(lower, dtype=float)
    m = linear.size
    states = (0, 1, 2) if upper is not None else (0, 1)  # lower, free, upper
    scale = max(1.0, np.abs(hessian).max(), np.abs(linear).max())
    best_x, best_f = None, np.inf
    for pattern in itertools.product(states, repeat=m):
        pattern = np.array(pattern)
        x = np.empty(m)
        x[pattern == 0] = lower[pattern == 0]
        if upper is not None:
            x[pattern == 2] = upper[pattern == 2]
        free = pattern == 1
        if free.any():
            a_ff = hessian[np.ix_(free, free)]
            rhs = -(linear[free] + hessian[np.ix_(free, ~free)] @ x[~free])
            try:
                x_f = np.linalg.solve(a_ff, rhs)
            except np.linalg.LinAlgError:
                x_f, *_ = np.linalg.lstsq(a_ff, rhs, rcond=None)
                if np.linalg.norm(a_ff @ x_f - rhs) > tol * scale:
                    continue
            x[free] = x_f
            if np.any(x_f < lower[free] - tol * scale):
                continue
            if upper is not None and np.any(x_f > upper[free] + tol * scale):
                continue
        g = hessian @ x + linear
        if np.any(g[pattern == 0] < -tol * scale):
            continue
        if upper is not None and np.any(g[pattern == 2] > tol * scale):
            continue
        x = np.clip(x, lower, upper) if upper is not None else np.maximum(x, lower)
        f = 0.5 * x @ hessian @ x + linear @ x
        if f < best_f:
            best_f, best_x = f, x
    assert best_x is not None, "oracle found no KKT point"
    return best_x


def pair_count_auc(scores, labels):
    """AUC as (#correctly ordered positive/negative pairs + half ties) / total."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == -1]
    assert pos.size > 0 and neg.size > 0
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (pos.size * neg.size)


def fd_gradient(fun, x, step=1e-5):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = step
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * step)
    return g


def fd_hessian_from_gradient(grad_fun, x, step=1e-5):
    """Central-difference Jacobian of a gradient function, symmetrized."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        h[:, i] = (grad_fun(x + e) - grad_fun(x - e)) / (2.0 * step)
    return 0.5 * (h + h.T)


def random_svm_dual_instance(rng, m=None, loss="l1", c=1.0, gamma=1.0, min_eig=0.2):
    """Dense dual of a random small SVM problem: (hessian, linear, lower, upper).

    Feature count is at least the sample count so the Gramian (hence the dual
    Hessian) has full rank and the minimizer is unique.  Draws whose Gramian
    has an eigenvalue below `min_eig` are redrawn: at a relative
    projected-gradient stop of 1e-6 the attainable solution accuracy scales
    with the inverse of that eigenvalue, so a conditioning floor keeps the
    oracle comparison meaningful at a fixed tolerance.
    """
    if m is None:
        m = int(rng.integers(2, 9))
    n = m + int(rng.integers(0, 3))
    while True:
        features = rng.standard_normal((m, n))
        labels = np.empty(m, dtype=int)
        labels[: m // 2] = 1
        labels[m // 2:] = -1
        if rng.random() < 0.5:
            labels = labels[rng.permutation(m)]
        if np.all(labels == labels[0]):  # guard tiny m oddities
            labels[0] = -labels[0]
        augmented = np.hstack([features, np.full((m, 1), gamma)])
        gram = augmented @ augmented.T
        if np.linalg.eigvalsh(gram)[0] >= min_eig:
            break
    y = labels.astype(float)
    hessian = (y[:, None] * gram) * y[None, :]
    if loss == "l2":
        hessian = hessian + (1.0 / c) * np.eye(m)
        upper = None
    else:
        upper = np.full(m, float(c))
    return {
        "features": features,
        "labels": labels,
        "gamma": gamma,
        "hessian": hessian,
        "linear": -np.ones(m),
        "lower": np.zeros(m),
        "upper": upper,
        "c": c,
        "loss": loss,
    }
