import numpy as np
import scipy.integrate
import scipy.linalg

from nlwsplit.spectral import SpectralField, to_spectral


def random_real_field(grid, seed, zero_nyquist=False):
    rng = np.random.default_rng(seed)
    f = to_spectral(rng.standard_normal(grid.shape), grid)
    if zero_nyquist:
        c = f.coeffs.copy()
        c[grid.nyquist_mask] = 0.0
        f = SpectralField(grid, c)
    return f


def random_complex_field(grid, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return to_spectral(z, grid)


def phi2_oracle(lam: float, t: float) -> np.ndarray:
    """int_0^1 (1 - sigma) expm(sigma t A_lambda) d sigma by adaptive quadrature."""
    gen = np.array([[0.0, 1.0], [-lam**2, 0.0]])
    out = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            out[i, j] = scipy.integrate.quad(
                lambda s: (1 - s) * scipy.linalg.expm(s * t * gen)[i, j],
                0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return out
