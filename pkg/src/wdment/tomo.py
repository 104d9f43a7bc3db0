"""Density-matrix reconstruction from 16 coincidence counts.

Linear inversion solves the design system in a Hermitian (Pauli) basis, so
its output is Hermitian by construction; its trace is fixed by dividing out
the basis-completion total (HH + HV + VH + VV). Maximum likelihood uses the
Cholesky-style parametrization ``A = T^dag T`` with ``T`` lower triangular,
so the scale of ``A`` plays the role of the unknown pair number and
``rho = A / Tr A`` is always a valid state.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .measure import TOMO_LABELS, CountRecord, design_matrix, setting
from .qstate import (
    PHI_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    concurrence,
    fidelity_max_phase,
    fidelity_pure,
    purity,
)

MU_FLOOR = 1e-12

_PAULI = (np.eye(2, dtype=complex), SIGMA_X, SIGMA_Y, SIGMA_Z)
# Orthonormal Hermitian operator basis under the Hilbert-Schmidt product.
HERMITIAN_BASIS = np.array([np.kron(a, b) / 2 for a in _PAULI for b in _PAULI])

_SETTINGS = [setting(lab) for lab in TOMO_LABELS]
_B = design_matrix(_SETTINGS)
_OPS = np.array([s.operator for s in _SETTINGS])
# Real system M r = s with rho = sum_k r_k HERMITIAN_BASIS[k].
_M = np.real(_B @ HERMITIAN_BASIS.reshape(16, 16).T)
_M_INV = np.linalg.inv(_M)
_TRIL = np.tril_indices(4, -1)


class ReconstructionError(ValueError):
    pass


def _count_vector(records: list[CountRecord]) -> np.ndarray:
    by_label = {}
    for r in records:
        if r.setting.label in by_label:
            raise ReconstructionError(f"duplicate setting {r.setting.label!r}")
        by_label[r.setting.label] = float(r.count)
    if set(by_label) != set(TOMO_LABELS):
        missing = sorted(set(TOMO_LABELS) - set(by_label))
        extra = sorted(set(by_label) - set(TOMO_LABELS))
        raise ReconstructionError(f"settings mismatch: missing {missing}, unexpected {extra}")
    n = np.array([by_label[lab] for lab in TOMO_LABELS])
    if np.any(n < 0) or not np.all(np.isfinite(n)):
        raise ReconstructionError("counts must be finite and non-negative")
    return n


def _linear_unnormalized(n: np.ndarray) -> np.ndarray:
    r = _M_INV @ n
    a = np.tensordot(r, HERMITIAN_BASIS, axes=1)
    return (a + a.conj().T) / 2


def linear_reconstruct(records: list[CountRecord]) -> np.ndarray:
    """Unconstrained Hermitian, unit-trace estimate; may have negative eigenvalues."""
    a = _linear_unnormalized(_count_vector(records))
    total = np.trace(a).real
    if not total > 0:
        raise ReconstructionError("basis-completion total (HH+HV+VH+VV) is zero")
    return a / total


def project_physical(a) -> np.ndarray:
    """Clamp negative eigenvalues to zero and renormalize the trace."""
    a = np.asarray(a, dtype=complex)
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(4, dtype=complex) / 4
    rho = (v * (w / w.sum())) @ v.conj().T
    return (rho + rho.conj().T) / 2


def _t_from_params(t: np.ndarray) -> np.ndarray:
    T = np.diag(t[:4]).astype(complex)
    T[_TRIL] = t[4:10] + 1j * t[10:16]
    return T


def _params_from_a(a: np.ndarray) -> np.ndarray:
    # a = T^dag T with T lower triangular: Cholesky of the index-reversed matrix.
    rev = a[::-1, ::-1]
    c = np.linalg.cholesky((rev + rev.conj().T) / 2)
    T = c.conj().T[::-1, ::-1]
    return np.concatenate([T.diagonal().real, T[_TRIL].real, T[_TRIL].imag])


def _mu(a: np.ndarray, accidentals) -> np.ndarray:
    return np.real(_B @ a.ravel()) + accidentals


def poisson_nll(a: np.ndarray, n: np.ndarray, accidentals=0.0) -> float:
    """``sum(mu - n ln mu)`` for the unnormalized model matrix ``a``."""
    mu = _mu(a, accidentals)
    return float(np.sum(mu - n * np.log(np.maximum(mu, MU_FLOOR))))


def _nll_and_grad(t, n, accidentals, scale):
    T = _t_from_params(t)
    a = T.conj().T @ T
    mu = _mu(a, accidentals)
    mu_f = np.maximum(mu, MU_FLOOR)
    nll = np.sum(mu - n * np.log(mu_f))
    w = 1.0 - np.where(mu > MU_FLOOR, n / mu_f, 0.0)
    G = np.tensordot(w, _OPS, axes=1)
    C = (G @ T.conj().T).T
    g = np.concatenate([2 * C.diagonal().real, 2 * C[_TRIL].real, -2 * C[_TRIL].imag])
    return nll / scale, g / scale


@dataclass
class MleOptions:
    max_evals: int = 100_000
    rel_tol: float = 1e-9  # relative NLL change between iterations
    grad_tol: float = 1e-6  # gradient norm, NLL measured per expected count
    accidentals: float | np.ndarray = 0.0


@dataclass
class ReconstructionResult:
    rho: np.ndarray
    method: str
    nll: float | None = None
    iterations: int = 0
    linear_raw: np.ndarray | None = None
    converged: bool = True
    evaluations: int = 0
    nll_start: float | None = None
    notes: list[str] = field(default_factory=list)


def _profiled_scale(rho: np.ndarray, n: np.ndarray, accidentals) -> float:
    p = _mu(rho, 0.0)
    acc = np.broadcast_to(np.asarray(accidentals, dtype=float), n.shape)
    return max(float((n.sum() - acc.sum()) / p.sum()), MU_FLOOR)


def mle_reconstruct(records: list[CountRecord], options: MleOptions | None = None) -> ReconstructionResult:
    """Poisson maximum-likelihood estimate, started from the projected linear inversion."""
    opts = options or MleOptions()
    n = _count_vector(records)
    if n.sum() <= 0:
        raise ReconstructionError("all counts are zero")
    acc = opts.accidentals
    notes = []

    raw = None
    a_lin = _linear_unnormalized(n)
    if np.trace(a_lin).real > 0:
        raw = a_lin / np.trace(a_lin).real
        rho0 = project_physical(raw)
    else:
        notes.append("linear inversion undefined; started from I/4")
        rho0 = np.eye(4, dtype=complex) / 4
    scale = _profiled_scale(rho0, n, acc)
    a0 = scale * rho0
    nll_start = poisson_nll(a0, n, acc)

    # Boundary starts are singular for Cholesky; nudge toward the interior.
    t0 = _params_from_a(scale * (0.999 * rho0 + 0.001 * np.eye(4) / 4))
    t_scale = np.sqrt(scale)

    history = []

    def fun(x):
        f, g = _nll_and_grad(x * t_scale, n, acc, scale)
        return f, g * t_scale

    def callback(xk):
        history.append(fun(xk)[0])

    res = minimize(
        fun,
        t0 / t_scale,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={"maxfun": opts.max_evals, "maxiter": opts.max_evals, "ftol": 1e-15, "gtol": 1e-12},
    )
    _, g_end = fun(res.x)
    rel_change = (
        abs(history[-1] - history[-2]) / max(abs(history[-1]), 1e-300) if len(history) > 1 else np.inf
    )
    converged = bool(np.linalg.norm(g_end) < opts.grad_tol or rel_change < opts.rel_tol)

    T = _t_from_params(res.x * t_scale)
    a = T.conj().T @ T
    nll = poisson_nll(a, n, acc)
    if nll > nll_start:
        notes.append("optimizer did not improve on the start; returning the start")
        a, nll = a0, nll_start
    rho = a / np.trace(a).real
    rho = (rho + rho.conj().T) / 2

    if not converged:
        warnings.warn(
            f"MLE did not meet convergence criteria after {res.nfev} evaluations "
            f"(|grad|={np.linalg.norm(g_end):.2e}, rel change={rel_change:.2e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return ReconstructionResult(
        rho=rho,
        method="mle",
        nll=nll,
        iterations=int(res.nit),
        linear_raw=raw,
        converged=converged,
        evaluations=int(res.nfev),
        nll_start=nll_start,
        notes=notes,
    )


def reconstruct(records: list[CountRecord], method: str = "mle",
                options: MleOptions | None = None) -> ReconstructionResult:
    if method == "mle":
        return mle_reconstruct(records, options)
    if method == "linear":
        raw = linear_reconstruct(records)
        return ReconstructionResult(rho=project_physical(raw), method="linear", linear_raw=raw)
    raise ValueError(f"unknown reconstruction method {method!r}")


def report_metrics(result) -> dict:
    """Fidelities, phase, concurrence and purity of a reconstruction (or a bare state)."""
    rho = result.rho if isinstance(result, ReconstructionResult) else np.asarray(result, dtype=complex)
    f_max, theta = fidelity_max_phase(rho)
    return {
        "fidelity_phi_plus": fidelity_pure(rho, PHI_PLUS),
        "fidelity_max_phase": f_max,
        "theta_star": theta,
        "concurrence": concurrence(rho),
        "purity": purity(rho),
    }
