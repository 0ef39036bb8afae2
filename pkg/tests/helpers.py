"""Independent oracles shared by the test modules.

Everything here deliberately avoids the code paths it checks: the dense
Jacobi eigensolver is the oracle for the tridiagonal QL routine, the literal
small-dt Bernoulli walker is the oracle for the event-driven sampler, and
dense matrix construction is the oracle for the tridiagonal storage.
"""
import numpy as np


def dense_from_generator(gen) -> np.ndarray:
    n = gen.n_sites
    L = np.zeros((n, n))
    L[np.arange(n), np.arange(n)] = gen.diagonal
    if hasattr(gen, "off_diagonal"):
        lower = upper = np.asarray(gen.off_diagonal)
    else:
        lower, upper = np.asarray(gen.lower), np.asarray(gen.upper)
    for k in range(n - 1):
        L[k + 1, k] = lower[k]
        L[k, k + 1] = upper[k]
    return L


def embedded_dense(gen) -> np.ndarray:
    """Finite section plus one exterior site on each end, with the jump
    vectors restored, so probability conservation is visible as column sums."""
    n = gen.n_sites
    M = np.zeros((n + 2, n + 2))
    M[1:-1, 1:-1] = dense_from_generator(gen)
    M[0, 1] = gen.jump_left[0]
    M[-1, -2] = gen.jump_right[-1]
    return M


def jacobi_eigh(A: np.ndarray, sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations on a dense symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off < 1e-14 * max(1.0, np.max(np.abs(np.diag(A)))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                rot_p = c * V[:, p] - s * V[:, q]
                rot_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = rot_p, rot_q
    vals = np.diag(A).copy()
    order = np.argsort(vals)
    return vals[order], V[:, order]


def naive_dt_walker(config, n_sites: int, i_max: int, dt: float, seed: int) -> np.ndarray:
    """Literal discrete-time walk: per step, jump right with probability
    (gamma_bar - (-1)^n alpha) dt, left with (gamma_bar + (-1)^n alpha) dt,
    else stay. Vectorized over trajectories; escape time is steps * dt."""
    rng = np.random.default_rng(seed)
    gb, al = config.gamma_bar, config.alpha
    sites = np.arange(1, n_sites + 1)
    p_plus = (gb - (-1.0) ** sites * al) * dt
    p_minus = (gb + (-1.0) ** sites * al) * dt
    pos = np.full(i_max, 1)  # all walkers start at site 1
    alive = np.arange(i_max)
    steps = np.zeros(i_max, dtype=np.int64)
    k = 0
    while alive.size:
        k += 1
        u = rng.random(alive.size)
        pp = p_plus[pos[alive] - 1]
        pm = p_minus[pos[alive] - 1]
        move = np.where(u < pp, 1, np.where(u < pp + pm, -1, 0))
        pos[alive] += move
        escaped = (pos[alive] < 1) | (pos[alive] > n_sites)
        steps[alive[escaped]] = k
        alive = alive[~escaped]
    return steps * dt
