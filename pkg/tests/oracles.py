"""Independent reference computations used by the tests.

None of these share code paths with the functions they check: they use scipy's
special functions, brute-force sums or direct operator algebra instead.
"""

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, factorial, hermite

from mechqsr.hilbert import DensityMatrix, annihilation, quadrature


def fock_s_distribution(n, s, alpha):
    """Closed-form s-ordered distribution of the Fock state |n> (s < 1, s != -1).

    P(s, alpha) = 2/(pi(1-s)) ((s+1)/(s-1))^n exp(-2|alpha|^2/(1-s)) L_n(4|alpha|^2/(1-s^2))
    """
    r2 = np.abs(alpha) ** 2
    return (2.0 / (math.pi * (1 - s)) * ((s + 1) / (s - 1)) ** n
            * np.exp(-2 * r2 / (1 - s)) * eval_genlaguerre(n, 0, 4 * r2 / (1 - s * s)))


def gaussian_s_distribution(mean_alpha, var_alpha, s, alpha):
    """Isotropic Gaussian state: per-component variance ``var_alpha`` in alpha at s = 0.

    Coherent and thermal states are Gaussian with W variance (2 nbar + 1)/4 per
    component; lowering s by ds adds ds/4.
    """
    v = var_alpha - s / 4.0
    return np.exp(-np.abs(alpha - mean_alpha) ** 2 / (2 * v)) / (2 * math.pi * v)


def hermite_function_direct(n, x):
    """psi_n(x) from scipy's physicists' Hermite polynomial (fine for small n)."""
    return (hermite(n)(x) * np.exp(-x * x / 2)
            / math.sqrt(2.0 ** n * factorial(n) * math.sqrt(math.pi)))


def displacement_expm(alpha, dim, pad=120):
    big = dim + pad
    a = annihilation(big)
    return expm(alpha * a.T - np.conj(alpha) * a)[:dim, :dim]


def char_function_expm(rho: DensityMatrix, s, xi, pad=120):
    d = displacement_expm(xi, rho.dim, pad)
    return np.trace(rho.elements @ d) * math.exp(s * abs(xi) ** 2 / 2)


def marginal_char_fock_trace(rho: DensityMatrix, eta, theta, pad=120):
    big = rho.dim + pad
    u = expm(1j * eta * quadrature(theta, big))[: rho.dim, : rho.dim]
    return np.trace(rho.elements @ u)


def kraus_condition(rho: DensityMatrix, chi, pl, sigma_p=0.0, sigma_x=0.0, omega=0.0,
                    pad=160, nodes=16):
    """Apply the linearised pulse Kraus operator in the Fock basis and return moments.

    Upsilon = pi^{-1/4} exp(-(pl - P_alpha - chi X)^2 / 2) exp(i omega X + i chi dX X),
    averaged over the Gaussian probe P-function (P_alpha ~ N(0, sigma_p^2),
    dX ~ N(0, sigma_x^2)) by Gauss-Hermite quadrature.  Functions of X are built
    from the eigendecomposition of the truncated X matrix.
    """
    big = rho.dim + pad
    x_op = quadrature(0.0, big).real
    xk, vec = np.linalg.eigh(x_op)
    r = np.zeros((big, big), dtype=complex)
    r[: rho.dim, : rho.dim] = rho.elements

    gh_x, gh_w = np.polynomial.hermite.hermgauss(nodes)
    gh_w = gh_w / math.sqrt(math.pi)
    pa = [(0.0, 1.0)] if sigma_p == 0 else list(zip(math.sqrt(2) * sigma_p * gh_x, gh_w))
    dx = [(0.0, 1.0)] if sigma_x == 0 else list(zip(math.sqrt(2) * sigma_x * gh_x, gh_w))

    out = np.zeros_like(r)
    for p_alpha, wp in pa:
        for d_x, wx in dx:
            diag = (math.pi ** -0.25 * np.exp(-0.5 * (pl - p_alpha - chi * xk) ** 2)
                    * np.exp(1j * (omega + chi * d_x) * xk))
            ups = (vec * diag) @ vec.T
            out += wp * wx * ups @ r @ ups.conj().T
    prob = np.trace(out).real
    out /= prob

    a = annihilation(big)
    X = (a + a.T) / math.sqrt(2)
    P = 1j * (a.T - a) / math.sqrt(2)
    ex = lambda op: np.trace(out @ op).real  # noqa: E731
    mx, mp = ex(X), ex(P)
    cov = np.array([[ex(X @ X) - mx * mx, 0.5 * ex(X @ P + P @ X) - mx * mp],
                    [0.5 * ex(X @ P + P @ X) - mx * mp, ex(P @ P) - mp * mp]])
    edge = np.abs(np.diag(out)[-pad // 4:]).sum()
    return {"mean": np.array([mx, mp]), "cov": cov, "prob": prob, "edge_weight": edge}
