"""Zeroth-order Hankel transforms on a uniform midpoint grid.

For radially symmetric functions in the plane the 2-D Fourier transform is
``F(k) = 2 pi int f(r) J0(k r) r dr`` and convolution becomes a pointwise
product, which is how isotropic 2-D convolutions are evaluated here.
"""

import numpy as np
from scipy.special import j0


class HankelGrid:
    """Midpoint grids ``r_i = (i + 1/2) dr`` and ``k_j = (j + 1/2) dk`` with
    ``dk = pi / r_max``, and the dense ``J0(k_j r_i)`` kernel."""

    def __init__(self, r_max: float = 16.0, n: int = 2048):
        self.r_max = float(r_max)
        self.n = int(n)
        self.dr = self.r_max / self.n
        self.dk = np.pi / self.r_max
        self.r = (np.arange(self.n) + 0.5) * self.dr
        self.k = (np.arange(self.n) + 0.5) * self.dk
        self.kernel = j0(np.outer(self.k, self.r))

    def forward(self, f):
        return 2.0 * np.pi * self.dr * (self.kernel @ (f * self.r))

    def inverse(self, F):
        return self.dk / (2.0 * np.pi) * (self.kernel.T @ (F * self.k))

    def convolve(self, f, g):
        """Isotropic 2-D convolution ``(f * g)(r)`` sampled on ``self.r``."""
        return self.inverse(self.forward(f) * self.forward(g))
