"""Truncated Fock-space states and operators of a single oscillator mode.

Conventions: hbar = 1, X = (a + a^dag)/sqrt(2), P = i(a^dag - a)/sqrt(2), so the
vacuum has quadrature variance 1/2.  Operators are plain complex ``ndarray``
matrices in the basis |0>, ..., |dim-1>.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError

DEFICIT_THRESHOLD = 1e-8
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix of the mechanical mode in a truncated Fock basis.

    ``truncation_deficit`` is the probability weight the untruncated state has
    outside the kept subspace.  Constructors renormalize, so the trace is one.
    """

    elements: np.ndarray
    truncation_deficit: float = 0.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        rho = np.array(self.elements, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise ValueError(f"density matrix must be square and non-empty, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if not (1.0 - self.truncation_deficit - 1e-9 <= tr <= 1.0 + 1e-9):
            raise ValueError(f"trace {tr} outside [1 - deficit, 1]")
        if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "elements", rho)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def from_ket(cls, psi, truncation_deficit=0.0, label=""):
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), truncation_deficit, label)

    def mean_number(self) -> float:
        return float(np.real(np.sum(np.arange(self.dim) * np.diag(self.elements))))

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.elements / np.trace(self.elements).real,
                             self.truncation_deficit, self.label)

    def padded(self, dim: int) -> np.ndarray:
        """Elements embedded in a larger Fock space (zeros outside)."""
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros((dim, dim), dtype=np.complex128)
        out[: self.dim, : self.dim] = self.elements
        return out


# -- operators ---------------------------------------------------------------

def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(np.complex128)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).T.copy()


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim)).astype(np.complex128)


def parity(dim: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(dim)).astype(np.complex128)


def quadrature(theta: float, dim: int) -> np.ndarray:
    """Matrix of X_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2)."""
    a = annihilation(dim)
    return (a * np.exp(-1j * theta) + a.T * np.exp(1j * theta)) / math.sqrt(2)


def coherent_amplitudes(alpha, dim: int) -> np.ndarray:
    """Fock amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!) of |alpha>.

    ``alpha`` may be an array; the Fock index is the leading axis of the result.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    out = np.empty((dim,) + alpha.shape, dtype=np.complex128)
    out[0] = np.exp(-0.5 * np.abs(alpha) ** 2)
    for n in range(1, dim):
        out[n] = out[n - 1] * alpha / math.sqrt(n)
    return out


def _laguerre_diagonals(alpha, dim: int):
    """Yield (k, h) with h[n] = |<n+k|D(alpha)|n>| up to sign, for k = 0..dim-1.

    h[n] = sqrt(n!/(n+k)!) |alpha|^k exp(-|alpha|^2/2) L_n^{(k)}(|alpha|^2), built
    with the three-term Laguerre recurrence rewritten for the normalized values:
    sqrt((n+1)(n+1+k)) h[n+1] = (2n+1+k-x) h[n] - sqrt(n(n+k)) h[n-1].
    """
    x = np.abs(alpha) ** 2
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(alpha))
    for k in range(dim):
        length = dim - k
        h = np.empty((length,) + x.shape)
        if k == 0:
            h[0] = np.exp(-0.5 * x)
        else:
            h[0] = np.exp(-0.5 * x + k * log_abs - 0.5 * math.lgamma(k + 1))
        if length > 1:
            h[1] = (1 + k - x) * h[0] / math.sqrt(k + 1)
        for n in range(1, length - 1):
            h[n + 1] = ((2 * n + 1 + k - x) * h[n]
                        - math.sqrt(n * (n + k)) * h[n - 1]) / math.sqrt((n + 1) * (n + 1 + k))
        yield k, h


def displacement_elements(alpha, dim: int) -> np.ndarray:
    """Fock matrix elements <m|D(alpha)|n>, broadcast over an array of alphas.

    Closed form in associated Laguerre polynomials, evaluated one diagonal at a
    time by a stable recurrence.  Output shape ``(dim, dim) + alpha.shape``.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    out = np.empty((dim, dim) + alpha.shape, dtype=np.complex128)
    phase = np.exp(1j * np.angle(alpha))
    idx = np.arange(dim)
    for k, h in _laguerre_diagonals(alpha, dim):
        n = idx[: dim - k]
        lower = h * phase ** k
        out[n + k, n] = lower
        if k:
            out[n, n + k] = (-1) ** k * lower.conj()
    return out


def displacement_trace(rho_elements: np.ndarray, alpha) -> np.ndarray:
    """Tr[rho D(alpha)] for an array of alphas without forming the matrices."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    dim = rho_elements.shape[0]
    phase = np.exp(1j * np.angle(alpha))
    total = np.zeros(alpha.shape, dtype=np.complex128)
    expand = (slice(None),) + (None,) * alpha.ndim
    for k, h in _laguerre_diagonals(alpha, dim):
        n = np.arange(dim - k)
        lower = h * phase ** k
        # Tr[rho D] = sum rho[n, n+k] D[n+k, n] + rho[n+k, n] D[n, n+k]
        total += np.sum(rho_elements[n, n + k][expand] * lower, axis=0)
        if k:
            total += (-1) ** k * np.sum(rho_elements[n + k, n][expand] * lower.conj(), axis=0)
    return total


def displacement_matrix(alpha: complex, dim: int) -> np.ndarray:
    """Truncated matrix of D(alpha) = exp(alpha a^dag - alpha^* a)."""
    if dim < 1:
        raise ValueError("dim must be positive")
    return displacement_elements(complex(alpha), dim)


# -- states ------------------------------------------------------------------

def default_dim(kind: str, **params) -> int:
    """Cutoff heuristic; constructors still check the actual deficit."""
    if kind in ("coherent", "cat"):
        a = abs(complex(params.get("alpha", params.get("beta", 0))))
        return math.ceil(a * a + 6 * a + 10)
    if kind == "fock":
        return int(params["n"]) + 1
    if kind == "thermal":
        nbar = float(params["nbar"])
        if nbar == 0:
            return 1
        return math.ceil(math.log(DEFICIT_THRESHOLD / 10) / math.log(nbar / (1 + nbar)))
    if kind == "squeezed":
        r = float(params["r"])
        return 2 * math.ceil(8 * math.exp(2 * abs(r))) + 10
    raise ValueError(f"unknown state kind {kind!r}")


def _check_deficit(deficit: float, kind: str, dim: int) -> float:
    deficit = max(0.0, float(deficit))
    if deficit > DEFICIT_THRESHOLD:
        raise TruncationError(
            f"{kind} state needs more than {dim} Fock levels "
            f"(truncation deficit {deficit:.3g} > {DEFICIT_THRESHOLD:g})"
        )
    return deficit


def fock(n: int, dim: int) -> DensityMatrix:
    if n < 0:
        raise ValueError("Fock index must be non-negative")
    if n >= dim:
        raise TruncationError(f"Fock state |{n}> does not fit in dim={dim}")
    psi = np.zeros(dim, dtype=np.complex128)
    psi[n] = 1.0
    return DensityMatrix.from_ket(psi, 0.0, f"fock({n})")


def coherent(alpha: complex, dim: int) -> DensityMatrix:
    psi = coherent_amplitudes(complex(alpha), dim)
    deficit = _check_deficit(1.0 - math.fsum(np.abs(psi) ** 2), "coherent", dim)
    return DensityMatrix.from_ket(psi, deficit, f"coherent({complex(alpha)})")


def cat(beta: complex, dim: int) -> DensityMatrix:
    """Even cat state (|beta> + |-beta>), normalized."""
    beta = complex(beta)
    c = coherent_amplitudes(beta, dim)
    psi = c + coherent_amplitudes(-beta, dim)
    norm2 = 2.0 * (1.0 + math.exp(-2.0 * abs(beta) ** 2))
    deficit = _check_deficit(1.0 - math.fsum(np.abs(psi) ** 2) / norm2, "cat", dim)
    return DensityMatrix.from_ket(psi, deficit, f"cat({beta})")


def thermal(nbar: float, dim: int) -> DensityMatrix:
    if nbar < 0:
        raise ValueError("mean occupation must be non-negative")
    n = np.arange(dim)
    if nbar == 0:
        p = (n == 0).astype(float)
        deficit = 0.0
    else:
        q = nbar / (1.0 + nbar)
        p = q ** n / (1.0 + nbar)
        deficit = q ** dim
    deficit = _check_deficit(deficit, "thermal", dim)
    return DensityMatrix(np.diag(p / p.sum()).astype(np.complex128), deficit, f"thermal({nbar})")


def squeezed_vacuum(r: float, dim: int) -> DensityMatrix:
    """S(r)|0> with S(r) = exp(r (a^2 - a^dag^2) / 2); X variance e^{-2r}/2."""
    psi = np.zeros(dim, dtype=np.complex128)
    psi[0] = 1.0 / math.sqrt(math.cosh(r))
    t = math.tanh(r)
    for k in range(0, dim - 2, 2):
        psi[k + 2] = psi[k] * (-t) * math.sqrt((k + 1) / (k + 2))
    deficit = _check_deficit(1.0 - math.fsum(np.abs(psi) ** 2), "squeezed", dim)
    return DensityMatrix.from_ket(psi, deficit, f"squeezed({r})")


_BUILDERS = {
    "fock": (fock, "n"),
    "coherent": (coherent, "alpha"),
    "cat": (cat, "beta"),
    "thermal": (thermal, "nbar"),
    "squeezed": (squeezed_vacuum, "r"),
}


def make_state(kind: str, dim: int | None = None, **params) -> DensityMatrix:
    """Build one of the named test states.

    >>> make_state("coherent", dim=8, alpha=0).elements[0, 0]
    (1+0j)
    """
    if kind not in _BUILDERS:
        raise ValueError(f"unknown state kind {kind!r}; expected one of {sorted(_BUILDERS)}")
    builder, key = _BUILDERS[kind]
    if key not in params:
        raise ValueError(f"{kind} state needs parameter {key!r}")
    if dim is None:
        dim = default_dim(kind, **params)
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    return builder(params[key], int(dim))


# -- expectation values --------------------------------------------------------

def parity_expectation(rho: DensityMatrix) -> float:
    return float(np.sum((-1.0) ** np.arange(rho.dim) * np.diag(rho.elements).real))


def expect(rho: DensityMatrix, op: np.ndarray) -> complex:
    return complex(np.trace(rho.elements @ op))


def ordered_moment(rho: DensityMatrix, p: int, q: int, ordering: str = "normal") -> complex:
    """Moment with p annihilators and q creators in the given operator ordering.

    normal: <a^dag^q a^p>; antinormal: <a^p a^dag^q>; symmetric: average over all
    distinct orderings of the p + q factors.
    """
    if p < 0 or q < 0:
        raise ValueError("moment orders must be non-negative")
    if p + q > rho.dim / 4:
        raise TruncationError(f"moment order {p + q} too high for dim={rho.dim}")
    dim = rho.dim + p + q
    r = rho.padded(dim)
    a = annihilation(dim)
    ad = a.T.copy()

    def chain(ops):
        m = np.eye(dim, dtype=np.complex128)
        for o in ops:
            m = m @ o
        return complex(np.trace(r @ m))

    if ordering == "normal":
        return chain([ad] * q + [a] * p)
    if ordering == "antinormal":
        return chain([a] * p + [ad] * q)
    if ordering == "symmetric":
        total = 0j
        count = 0
        for pos in itertools.combinations(range(p + q), p):
            ops = [ad] * (p + q)
            for i in pos:
                ops[i] = a
            total += chain(ops)
            count += 1
        return total / count
    raise ValueError(f"unknown ordering {ordering!r}")
