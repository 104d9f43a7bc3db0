"""Two-photon polarization states.

Basis order is fixed everywhere as (HH, HV, VH, VV), signal photon first.
Index 0 is HH and index 3 is VV, so the HH/VV coherence of a density
matrix is ``rho[0, 3]``.

States and unitaries are plain numpy arrays; the helpers here validate
them on the way in rather than wrapping them in classes.
"""
from __future__ import annotations

import numpy as np

HH, HV, VH, VV = range(4)

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = -1e-9
UNITARY_TOL = 1e-10

_SQ2 = np.sqrt(2.0)

# Single-photon polarization kets. R = (H - iV)/sqrt2, L = (H + iV)/sqrt2.
H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
D = np.array([1.0, 1.0], dtype=complex) / _SQ2
A = np.array([1.0, -1.0], dtype=complex) / _SQ2
R = np.array([1.0, -1.0j], dtype=complex) / _SQ2
L = np.array([1.0, 1.0j], dtype=complex) / _SQ2
KETS = {"H": H, "V": V, "D": D, "A": A, "R": R, "L": L}

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_YY = np.kron(SIGMA_Y, SIGMA_Y)


def ket2(h, v) -> np.ndarray:
    """Normalized single-photon polarization ket ``h|H> + v|V>``."""
    k = np.array([h, v], dtype=complex)
    n = np.linalg.norm(k)
    if not np.isfinite(n) or n == 0:
        raise ValueError("ket2 needs finite, non-zero amplitudes")
    return k / n


def ket4(amplitudes) -> np.ndarray:
    """Normalized two-photon ket in (HH, HV, VH, VV) order."""
    k = np.asarray(amplitudes, dtype=complex).reshape(4)
    n = np.linalg.norm(k)
    if not np.isfinite(n) or n == 0:
        raise ValueError("ket4 needs finite, non-zero amplitudes")
    return k / n


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def bell_state(theta: float) -> np.ndarray:
    """``(|HH> + e^{i theta}|VV>)/sqrt2``."""
    if not np.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    psi = np.zeros(4, dtype=complex)
    psi[HH] = 1.0 / _SQ2
    psi[VV] = np.exp(1j * theta) / _SQ2
    return psi


PHI_PLUS = bell_state(0.0)


def werner(p: float, theta: float = 0.0) -> np.ndarray:
    """White-noise mixture ``p|psi(theta)><psi(theta)| + (1-p) I/4``."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"Werner weight must lie in [0, 1], got {p!r}")
    return p * projector(bell_state(theta)) + (1.0 - p) * np.eye(4) / 4.0


def is_physical(rho: np.ndarray) -> bool:
    rho = np.asarray(rho)
    if rho.shape != (4, 4) or not np.all(np.isfinite(rho)):
        return False
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        return False
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        return False
    return bool(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= POSITIVITY_TOL)


def check_physical(rho) -> np.ndarray:
    """Return ``rho`` as a complex array, raising ValueError if it is not a state."""
    rho = np.asarray(rho, dtype=complex)
    if not is_physical(rho):
        raise ValueError("density matrix is not physical (Hermitian, unit trace, PSD)")
    return rho


def fidelity_pure(rho, psi) -> float:
    """Overlap ``<psi|rho|psi>`` with a pure target."""
    rho = check_physical(rho)
    psi = np.asarray(psi, dtype=complex)
    f = psi.conj() @ rho @ psi
    if abs(f.imag) > 1e-10:
        raise ValueError(f"fidelity has imaginary part {f.imag:.3e}")
    return float(min(max(f.real, 0.0), 1.0))


def fidelity_max_phase(rho) -> tuple[float, float]:
    """Best fidelity to ``bell_state(theta)`` over theta, and the maximizing theta.

    The maximizer is ``-arg(rho[0, 3])``, reported in (-pi, pi]. With no
    HH/VV coherence the phase is undefined and 0 is returned.
    """
    rho = check_physical(rho)
    c = rho[HH, VV]
    f = 0.5 * (rho[HH, HH].real + rho[VV, VV].real) + abs(c)
    theta = 0.0 if abs(c) == 0 else float(-np.angle(c))
    if theta == -np.pi:
        theta = np.pi
    return float(min(f, 1.0)), theta


def concurrence(rho) -> float:
    """Wootters concurrence."""
    rho = check_physical(rho)
    rho_tilde = _YY @ rho.conj() @ _YY
    ev = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def purity(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def state_fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2`` between two states."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    sq = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sq @ sigma @ sq
    ev = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(min(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2, 1.0))


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def check_unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise ValueError("matrix is not unitary")
    return u


def tensor(a, b) -> np.ndarray:
    """Two-photon operator ``a (signal) x b (idler)``."""
    return np.kron(check_unitary(a), check_unitary(b))


def apply_local(rho, u_signal, u_idler) -> np.ndarray:
    u = tensor(u_signal, u_idler)
    out = u @ np.asarray(rho, dtype=complex) @ u.conj().T
    return (out + out.conj().T) / 2


def depolarize(rho, p: float) -> np.ndarray:
    """Mix ``rho`` with white noise: ``(1-p) rho + p I/4``."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"depolarizing probability must lie in [0, 1], got {p!r}")
    return (1.0 - p) * np.asarray(rho, dtype=complex) + p * np.eye(4) / 4.0


def partial_trace(rho, keep: str = "signal") -> np.ndarray:
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if keep == "signal":
        return np.einsum("ijkj->ik", r)
    if keep == "idler":
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 'signal' or 'idler', got {keep!r}")


def random_state(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    """Random density matrix from a 4 x rank Ginibre matrix."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# -- plain-text persistence -------------------------------------------------

def dumps_density(rho) -> str:
    """16 lines of ``re,im`` in row-major order."""
    rho = np.asarray(rho, dtype=complex).reshape(16)
    return "".join(f"{float(z.real)!r},{float(z.imag)!r}\n" for z in rho)


def loads_density(text: str) -> np.ndarray:
    vals = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        re_, im_ = line.split(",")
        vals.append(complex(float(re_), float(im_)))
    if len(vals) != 16:
        raise ValueError(f"expected 16 complex entries, found {len(vals)}")
    return np.array(vals).reshape(4, 4)
