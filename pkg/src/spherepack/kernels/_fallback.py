"""Pure numpy implementations of the hot kernels.

Semantics are shared with the compiled ``_core`` extension; the tests run both
and compare.
"""

from __future__ import annotations

import numpy as np


def convolve_merge(values, pmass, qmass, step_values, step_p, step_q, rtol=1e-12):
    """Add one independent letter to a discrete joint distribution.

    ``values`` is sorted ascending and carries two mass vectors (one per
    hypothesis). The result holds every sum ``values[i] + step_values[k]``
    sorted ascending, with runs of consecutive values whose gap is at most
    ``rtol * max(1, |previous|)`` merged into the first value of the run.
    Atoms whose two masses both vanish are dropped.
    """
    values = np.asarray(values, dtype=float)
    a = (np.asarray(step_p, dtype=float)[:, None] * np.asarray(pmass, dtype=float)[None, :]).ravel()
    b = (np.asarray(step_q, dtype=float)[:, None] * np.asarray(qmass, dtype=float)[None, :]).ravel()
    keep = (a > 0) | (b > 0)
    with np.errstate(invalid="ignore"):
        v = (np.asarray(step_values, dtype=float)[:, None] + values[None, :]).ravel()
    v, a, b = v[keep], a[keep], b[keep]
    if v.size == 0:
        return v, a, b
    order = np.argsort(v, kind="stable")
    v, a, b = v[order], a[order], b[order]
    prev = v[:-1]
    with np.errstate(invalid="ignore"):
        gap = v[1:] - prev
        same = (v[1:] == prev) | (gap <= rtol * np.maximum(1.0, np.abs(prev)))
    starts = np.flatnonzero(np.concatenate(([True], ~same)))
    return v[starts], np.add.reduceat(a, starts), np.add.reduceat(b, starts)


def tilted_moments(logp, logq, ts):
    """Cumulant data of ``Z = log q - log p`` under the tilted law ``p^(1-t) q^t``.

    Returns ``(lam, mean, var, third)`` arrays over ``ts``: the log-partition
    ``log sum p^(1-t) q^t``, the tilted mean and variance of ``Z`` and the
    tilted third absolute central moment. All atoms must be finite.
    """
    logp = np.asarray(logp, dtype=float)
    logq = np.asarray(logq, dtype=float)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    z = logq - logp
    lw = logp[None, :] + ts[:, None] * z[None, :]
    m = lw.max(axis=1, keepdims=True)
    w = np.exp(lw - m)
    s = w.sum(axis=1, keepdims=True)
    prob = w / s
    lam = m[:, 0] + np.log(s[:, 0])
    mean = prob @ z
    dev = z[None, :] - mean[:, None]
    var = np.sum(prob * dev * dev, axis=1)
    third = np.sum(prob * np.abs(dev) ** 3, axis=1)
    return lam, mean, var, third
