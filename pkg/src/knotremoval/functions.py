"""Built-in test functions."""

import numpy as np


def runge(x):
    """``1 / (1 + x^2)``, used on ``[-5, 5]``."""
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (1.0 + x * x)


def root5(x):
    """Real fifth root, used on ``[-1, 1]``."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.abs(x) ** 0.2


def heat_u0(x):
    """Initial value ``1 + sin(x^(7/20) exp(11 x / 50))`` on ``[0, 10]``."""
    x = np.asarray(x, dtype=np.float64)
    return 1.0 + np.sin(x**0.35 * np.exp(0.22 * x))


BUILTINS = {
    "runge": (runge, (-5.0, 5.0)),
    "root5": (root5, (-1.0, 1.0)),
    "heat-u0": (heat_u0, (0.0, 10.0)),
}
