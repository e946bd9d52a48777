import numpy as np
from scipy.optimize import linear_sum_assignment


def match_multisets(a, b) -> float:
    """Worst pair distance under the optimal matching of two complex point sets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    assert len(a) == len(b)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
