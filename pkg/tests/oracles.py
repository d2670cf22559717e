"""Independent reference computations used only by tests."""

import mpmath
import numpy as np

from cpimodel.data import trend_time


def design_by_hand(price, catalog, code1, lag1, code2, lag2, start, anchor):
    """Row-by-row design matrix built with scalar month lookups."""
    rows, ys = [], []
    m = start
    while m <= anchor:
        rows.append([catalog[code1].at(m - lag1), catalog[code2].at(m - lag2), trend_time(m), 1.0])
        ys.append(price.at(m))
        m = m + 1
    return np.array(rows), np.array(ys)


def normal_equations(X, y, dps=50):
    """Solve (X'X) b = X'y by explicit Gram-matrix inversion in 50-digit arithmetic."""
    with mpmath.workdps(dps):
        Xm = mpmath.matrix(X.tolist())
        ym = mpmath.matrix(y.tolist())
        G = Xm.T * Xm
        rhs = Xm.T * ym
        b = mpmath.inverse(G) * rhs
        return np.array([float(v) for v in b])
