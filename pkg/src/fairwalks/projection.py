"""Two-component PCA via power iteration, for plot-ready projections."""

import numpy as np

from fairwalks.seeds import rng_for


def _power_iteration(cov, rng, max_iters=500, tol=1e-9):
    v = rng.normal(0, 1, cov.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(max_iters):
        nxt = cov @ v
        norm = np.linalg.norm(nxt)
        if norm == 0:
            return v  # degenerate direction, any unit vector works
        nxt /= norm
        if np.linalg.norm(nxt - v) < tol and np.linalg.norm(nxt + v) > tol:
            return nxt
        v = nxt
    return v


def pca_2d(vectors, seed: int = 0) -> np.ndarray:
    """Project rows of ``vectors`` onto their top two principal components."""
    x = np.asarray(vectors, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / max(len(x) - 1, 1)
    rng = rng_for(seed, "pca")
    first = _power_iteration(cov, rng)
    deflated = cov - (first @ cov @ first) * np.outer(first, first)
    second = _power_iteration(deflated, rng)
    second -= (second @ first) * first
    norm = np.linalg.norm(second)
    if norm > 0:
        second /= norm
    return np.stack([centered @ first, centered @ second], axis=1)


def write_projection_csv(path, tokens, coords, groups):
    """CSV ``node_id,x,y,group`` for external plotting."""
    with open(path, "w") as f:
        f.write("node_id,x,y,group\n")
        for tok, (x, y), grp in zip(tokens, coords, groups):
            f.write(f"{tok},{float(x)!r},{float(y)!r},{grp}\n")
