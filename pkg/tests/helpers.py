"""Shared test utilities: small random datasets with guaranteed arm structure."""

import numpy as np

from riskratio import ObservationalDataset


def random_dataset(seed, n=None, p=2, binary=False, scale=5.0):
    """Random dataset with both arms non-empty and positive arm means.

    Binary datasets additionally have at least one event per arm, so every
    variance and interval in the suite is well defined on them.
    """
    g = np.random.default_rng(seed)
    if n is None:
        n = int(g.integers(10, 200))
    x = g.normal(size=(n, p))
    t = g.integers(0, 2, size=n)
    t[0], t[1] = 1, 0
    if binary:
        y = g.integers(0, 2, size=n).astype(float)
        treated = np.flatnonzero(t == 1)
        control = np.flatnonzero(t == 0)
        y[treated[0]] = 1.0
        y[control[0]] = 1.0
    else:
        y = g.uniform(0.5, scale, size=n)
    return ObservationalDataset(x=x, t=t, y=y)


def dataset_from(t, y, x=None):
    t = np.asarray(t)
    y = np.asarray(y, dtype=float)
    if x is None:
        x = np.arange(1.0, len(t) + 1.0).reshape(-1, 1)
    return ObservationalDataset(x=np.asarray(x, dtype=float), t=t, y=y)
