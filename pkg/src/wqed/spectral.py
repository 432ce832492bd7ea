"""Eigendecompositions, resolvent elements, participation ratio and localisation lengths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceFailure, DegenerateEigenvalue, NearDefective, ParameterError,
                     PoleProximity)
from .model import SectorHamiltonian, TwoParticleBasis

POLE_TOL = 1e-12
DEGENERACY_TOL = 1e-9
CONDITION_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class HermitianSpectrum:
    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class BiorthogonalSpectrum:
    """Complex spectrum with right eigenvectors as columns of `right` and left
    eigenvectors as rows of `left`, normalized so that left @ right = 1."""

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ResolventQuery:
    energy: complex
    bra: object
    ket: object


def eig_hermitian(ham: SectorHamiltonian) -> HermitianSpectrum:
    if not ham.hermitian:
        raise ParameterError("eig_hermitian needs a Hermitian sector Hamiltonian")
    try:
        w, v = np.linalg.eigh(ham.matrix)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return HermitianSpectrum(w, v)


def eig_biorthogonal(ham: SectorHamiltonian, check_condition: bool = True) -> BiorthogonalSpectrum:
    """Biorthogonal eigensystem of a complex-symmetric (non-Hermitian) matrix.

    For H = H^T the left eigenvectors are the plain transposes of the right ones,
    once each right column r is scaled to r^T r = 1. Inside exactly or nearly
    degenerate eigenspaces numpy returns a basis that is not transpose-orthogonal;
    there the left vectors are taken from the inverse of the right matrix instead.
    """
    H = np.asarray(ham.matrix)
    scale = max(1.0, np.abs(H).max())
    if np.abs(H - H.T).max() > 1e-12 * scale:
        raise ParameterError("eig_biorthogonal expects a complex-symmetric matrix")
    try:
        w, R = np.linalg.eig(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = np.lexsort((w.imag, w.real))
    w, R = w[order], R[:, order]
    cond = float(np.linalg.cond(R))
    if check_condition and cond > CONDITION_LIMIT:
        raise NearDefective(f"right-eigenvector condition number {cond:.3g} exceeds {CONDITION_LIMIT:g}")

    nrm = np.sum(R * R, axis=0)
    if np.all(np.abs(nrm) > 1e-6):
        R = R / np.sqrt(nrm)
        L = R.T.copy()
        if np.abs(L @ R - np.eye(w.size)).max() > 1e-10:
            L = np.linalg.inv(R)
    else:
        L = np.linalg.inv(R)
    return BiorthogonalSpectrum(w, R, L, cond)


def _fock_vector(label, dim: int, basis: TwoParticleBasis | None) -> np.ndarray:
    """Column index (or explicit vector) for a Fock label: site j, pair (i, j), or ndarray."""
    if isinstance(label, np.ndarray):
        return label
    e = np.zeros(dim)
    if isinstance(label, tuple):
        if basis is None:
            raise ParameterError("pair labels need a TwoParticleBasis")
        i, j = sorted(label)
        e[basis.index_of[(i, j)]] = 1.0
    else:
        e[int(label) - 1] = 1.0
    return e


def resolvent_element(query: ResolventQuery, spectrum: HermitianSpectrum,
                      basis: TwoParticleBasis | None = None) -> complex:
    """<bra|(E - H)^-1|ket> from the spectral sum over the closed-system eigenstates."""
    E = complex(query.energy)
    gaps = E - spectrum.values
    if np.min(np.abs(gaps)) < POLE_TOL:
        raise PoleProximity(f"E = {E} lies on an eigenvalue")
    bra = _fock_vector(query.bra, spectrum.dim, basis)
    ket = _fock_vector(query.ket, spectrum.dim, basis)
    V = spectrum.vectors
    return complex(np.sum((bra.conj() @ V) * (V.conj().T @ ket) / gaps))


def participation_ratio(alpha: int, spectrum: HermitianSpectrum) -> tuple[float, float]:
    """R(alpha) = 1 / sum |c|^4 and log_{d2} R(alpha); alpha is 1-based."""
    d = spectrum.dim
    if not 1 <= alpha <= d:
        raise ParameterError(f"alpha must be in [1, {d}], got {alpha}")
    c = spectrum.vectors[:, alpha - 1]
    R = 1.0 / float(np.sum(np.abs(c) ** 4))
    log_r = float(np.log(R) / np.log(d)) if d > 1 else 0.0
    return R, log_r


def participation_ratios(spectrum: HermitianSpectrum) -> tuple[np.ndarray, np.ndarray]:
    R = 1.0 / np.sum(np.abs(spectrum.vectors) ** 4, axis=0)
    d = spectrum.dim
    return R, (np.log(R) / np.log(d) if d > 1 else np.zeros_like(R))


def diagonal_residues(alpha: int, spectrum: HermitianSpectrum, matrix: np.ndarray,
                      npoints: int = 64) -> np.ndarray:
    """Residues of every diagonal resolvent element <s|(E - H)^-1|s> at E = E_alpha.

    Evaluated as (1/2 pi i) times a contour integral on a circle around E_alpha,
    using dense inverses of (E - H); the eigenvectors are never used. The radius is
    half the distance to the nearest other eigenvalue.
    """
    E = spectrum.values
    d = E.size
    Ea = E[alpha - 1]
    others = np.delete(E, alpha - 1)
    scale = max(1.0, float(np.abs(E).max()))
    gap = float(np.min(np.abs(others - Ea))) if others.size else scale
    if gap < DEGENERACY_TOL * scale:
        raise DegenerateEigenvalue(f"E_{alpha} is degenerate within {gap:.2e}")
    r = 0.5 * gap
    theta = 2 * np.pi * (np.arange(npoints) + 0.5) / npoints
    z = Ea + r * np.exp(1j * theta)
    eye = np.eye(d)
    acc = np.zeros(d, dtype=complex)
    for zk in z:
        G = np.linalg.inv(zk * eye - matrix)
        # dE = i (z - Ea) dtheta ; (1/2 pi i) * i * r e^{i theta} * 2pi/n
        acc += np.diag(G) * (zk - Ea)
    return acc / npoints


def pr_inverse_via_residues(alpha: int, spectrum: HermitianSpectrum, matrix: np.ndarray) -> float:
    """Participation ratio recovered from residues of the diagonal resolvent.

    res_{E -> E_alpha} <s|G(E)|s> = |c_s^alpha|^2, so 1 / sum_s |res|^2 is R(alpha).
    """
    res = diagonal_residues(alpha, spectrum, matrix)
    return 1.0 / float(np.sum(np.abs(res) ** 2))


def _log_length(element: complex, N: int) -> float:
    if N < 2:
        raise ParameterError("localisation length needs N >= 2")
    mag2 = abs(element) ** 2
    if mag2 == 0.0:
        return float("inf")
    return float(-np.log(mag2) / (2 * (N - 1)))


def localisation_length_1p(E: complex, spectrum: HermitianSpectrum, N: int) -> float:
    """1/lambda_1 = -ln|<N|G(E)|1>|^2 / (2(N-1)); +inf when the element vanishes."""
    return _log_length(resolvent_element(ResolventQuery(E, N, 1), spectrum), N)


def localisation_length_2p(E: complex, spectrum: HermitianSpectrum, N: int,
                           basis: TwoParticleBasis | None = None) -> float:
    """1/lambda_2 from the two-particle element <N,N|G(E)|1,1>."""
    basis = basis or TwoParticleBasis(N)
    q = ResolventQuery(E, (N, N), (1, 1))
    return _log_length(resolvent_element(q, spectrum, basis), N)
