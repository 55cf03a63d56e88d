"""Pure-Python coordinate ascent over conjunctive stratum subsets.

This is the reference backend; ``_ascent_ext`` implements the identical
algorithm in Cython. The pool is given as a cube of cells, one per distinct
combination of strata, with row counts ``cell_n`` and generated counts
``cell_y``. ``allowed[f, u]`` is 1 when stratum ``u`` of feature ``f`` is in
the current subset; a feature with every stratum allowed is unconstrained.
"""
from __future__ import annotations

import numpy as np

from .scanstat import score_value

TOL = 1e-12
MAX_SWEEPS = 100


def _better(s: float, best: float) -> bool:
    return s > best + TOL * (1.0 + abs(best))


def subset_totals(codes, cell_n, cell_y, allowed) -> tuple[int, int]:
    inside = np.all(allowed[np.arange(codes.shape[1]), codes], axis=1)
    return int(cell_n[inside].sum()), int(cell_y[inside].sum())


def ascend(codes: np.ndarray, cell_n: np.ndarray, cell_y: np.ndarray, n_strata: np.ndarray,
           allowed: np.ndarray, e_g: float, over: bool, q_min: float, q_max: float,
           min_size: int, trace: list | None = None) -> tuple[float, int]:
    """Run coordinate ascent from ``allowed`` (updated in place).

    Returns ``(score, sweeps)``. If ``trace`` is a list, the score after each
    single-feature update is appended.
    """
    n_cells, n_feat = codes.shape
    fail = np.zeros(n_cells, dtype=np.int32)
    for f in range(n_feat):
        fail += allowed[f, codes[:, f]] == 0
    n_tot, y_tot = int(cell_n[fail == 0].sum()), int(cell_y[fail == 0].sum())
    current = score_value(n_tot, y_tot, e_g, over, q_min, q_max)

    sweeps = 0
    while sweeps < MAX_SWEEPS:
        sweeps += 1
        improved = False
        for f in range(n_feat):
            C = int(n_strata[f])
            if C < 2:
                continue
            col = codes[:, f]
            fail_f = (allowed[f, col] == 0).astype(np.int32)
            others = (fail - fail_f) == 0
            n_u = np.bincount(col[others], weights=cell_n[others], minlength=C).astype(np.int64)
            y_u = np.bincount(col[others], weights=cell_y[others], minlength=C).astype(np.int64)

            nonempty = [u for u in range(C) if n_u[u] > 0]
            ratio = {u: y_u[u] / n_u[u] for u in nonempty}
            if over:
                order = sorted(nonempty, key=lambda u: (-ratio[u], u))
            else:
                order = sorted(nonempty, key=lambda u: (ratio[u], u))

            best, best_k = -1.0, -1
            N = Y = 0
            for k, u in enumerate(order, start=1):
                if k == len(order) and len(order) == C:
                    break  # the full set is the unconstrained option below
                N += int(n_u[u])
                Y += int(y_u[u])
                if N < min_size:
                    continue
                s = score_value(N, Y, e_g, over, q_min, q_max)
                if _better(s, best):
                    best, best_k = s, k
            Nt, Yt = int(n_u.sum()), int(y_u.sum())
            if Nt >= min_size:
                s = score_value(Nt, Yt, e_g, over, q_min, q_max)
                if _better(s, best):
                    best, best_k = s, 0
            if best_k < 0:
                continue  # no option meets min_size; keep this feature as is

            if best_k == 0:
                allowed[f, :C] = 1
            else:
                allowed[f, :C] = 0
                allowed[f, order[:best_k]] = 1
            fail += (allowed[f, col] == 0).astype(np.int32) - fail_f
            if _better(best, current):
                improved = True
            current = best
            if trace is not None:
                trace.append(current)
        if not improved:
            break
    return current, sweeps
