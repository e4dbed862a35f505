#
# Lloyd's k-means with k-means++ seeding and restarts, used to cluster
# users by their estimated reward rows.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import numpy as np


def _sq_distances(X, centroids):
    return ((X[:, np.newaxis, :] - centroids[np.newaxis, :, :])**2).sum(axis=2)

def kmeans_plusplus(X, k, rng):
    """Pick K initial centroids among the rows of X, each new one drawn
    with probability proportional to its squared distance from the
    centroids already chosen."""
    n = X.shape[0]
    chosen = [int(rng.integers(0, n))]
    for _ in range(1, k):
        dist = _sq_distances(X, X[chosen]).min(axis=1)
        total = dist.sum()
        if total <= 0:
            # every row coincides with a chosen centroid
            chosen.append(int(rng.integers(0, n)))
        else:
            chosen.append(int(rng.choice(n, p=dist / total)))
    return X[chosen].astype(float)

def _lloyd(X, k, rng, max_iter):
    centroids = kmeans_plusplus(X, k, rng)
    history = []
    labels = None
    for _ in range(max_iter):
        dist = _sq_distances(X, centroids)
        new_labels = np.argmin(dist, axis=1)
        history.append(float(dist[np.arange(len(X)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = X[members].mean(axis=0)
    return labels, centroids, history

def kmeans(X, k, rng, max_iter=50, n_init=10):
    """Cluster the rows of X.  Returns (labels, centroids, history),
    HISTORY being the objective after every assignment step.

    Lloyd's iterations run from N_INIT independent k-means++ seedings
    and the run with the lowest final objective is kept, the earliest on
    ties.  Ties between centroids go to the lower index; an emptied
    cluster keeps its previous centroid."""
    X = np.asarray(X, dtype=float)
    if not 1 <= k <= X.shape[0]:
        raise ValueError("need 1 <= k <= number of rows")
    if n_init < 1:
        raise ValueError("need at least one k-means start")
    best = None
    for _ in range(n_init):
        run = _lloyd(X, k, rng, max_iter)
        if best is None or run[2][-1] < best[2][-1]:
            best = run
    return best
