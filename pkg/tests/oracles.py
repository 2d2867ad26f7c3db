"""Independent oracles for the test suite.

Nothing here imports the package under test. The lattice objects are rebuilt
from first principles (explicit Fourier sums), and the continuum values are
closed forms. Frozen numbers were produced by these functions once and are
stored as literals so that a later change to an oracle cannot silently move
an expected value.
"""
import math

import numpy as np

# sinh(1): omega_theta of de Sitter (a = cosh t) at t = 1
SINH_1 = 1.1752011936438014
# cosh(1)^2: de Sitter g_thth at t = 1
COSH2_1 = 2.3810978455418157
# dt^3 coefficient of [f, U^dag g U] for H = sigma_3 c p - N m sigma_2, per unit m N^3 g^tt f' g' E
THIRD_ORDER = -2.0 / 3.0


def flat_spectrum(n: int, m: float, R: float = 1.0, shift: float = 0.0) -> np.ndarray:
    """Eigenvalues of the spectral-scheme flat-cylinder H (Nyquist mode zeroed)."""
    ks = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        ks = np.where(np.abs(ks) == n // 2, 0.0, ks)
    root = np.sqrt((ks / R) ** 2 + m * m)
    return np.sort(np.concatenate([shift * ks + root, shift * ks - root]))


def continuum_flat_levels(kmax: int, m: float, R: float = 1.0) -> np.ndarray:
    ks = np.arange(-kmax, kmax + 1)
    root = np.sqrt((ks / R) ** 2 + m * m)
    return np.sort(np.concatenate([root, -root]))


def spectral_derivative(n: int) -> np.ndarray:
    """Dense matrix of the band-limited derivative, built from explicit modes."""
    theta = 2 * np.pi * np.arange(n) / n
    ks = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        ks = np.where(np.abs(ks) == n // 2, 0.0, ks)
    modes = np.exp(1j * np.outer(theta, ks)) / math.sqrt(n)
    return (modes @ np.diag(1j * ks) @ modes.conj().T).real


def central_derivative(n: int) -> np.ndarray:
    h = 2 * np.pi / n
    d = np.zeros((n, n))
    for j in range(n):
        d[j, (j + 1) % n] = 1 / (2 * h)
        d[j, (j - 1) % n] = -1 / (2 * h)
    return d


def hamiltonian_constant(n: int, c: float, m: float, lapse: float = 1.0, shift: float = 0.0,
                         deriv=spectral_derivative) -> np.ndarray:
    """H = sigma_3 c p - N m sigma_2 + shift p for spatially constant data."""
    p = -1j * deriv(n)
    s2 = np.array([[0, -1j], [1j, 0]])
    s3 = np.diag([1.0, -1.0])
    return np.kron(s3, c * p) - lapse * m * np.kron(s2, np.eye(n)) + shift * np.kron(np.eye(2), p)


def nested_commutator_c3(h: np.ndarray, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Exact dt^3 coefficient of [f, e^{iH dt} g e^{-iH dt}] for static H: (i^3/3!) [f, ad_H^3 g]."""
    x = g
    for _ in range(3):
        x = h @ x - x @ h
    c = f @ x - x @ f
    return (1j) ** 3 / 6 * c


def nested_commutator_c2(h, f, g):
    x = g
    for _ in range(2):
        x = h @ x - x @ h
    return (1j) ** 2 / 2 * (f @ x - x @ f)


def s_exponent_bruteforce(n: int) -> int:
    prod = 1
    for k in range(1, 5):
        prod *= n - k
    assert prod % 8 == 0
    return prod // 8
