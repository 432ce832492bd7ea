"""Hamiltonians of the quasiperiodic Bose-Hubbard chain in the 1- and 2-particle sectors.

Energies are in units of the hopping J (J = 1 by default). Sites carry 1-based
labels in every public interface; arrays are 0-based internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import ParameterError, ResonantDenominator

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LatticeParams:
    """Physical parameters of chain + waveguides, all in units of J."""

    N: int
    U: float = 0.0
    h: float = 0.0
    b: float = GOLDEN
    kappa: float = 0.25
    gamma: float = 0.0
    sigma: float = 0.01
    J: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be an integer >= 1, got {self.N}")
        if not self.kappa > 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.U < 0:
            raise ParameterError(f"U must be >= 0, got {self.U}")
        if self.h < 0:
            raise ParameterError(f"h must be >= 0, got {self.h}")
        if self.J < 0:
            raise ParameterError(f"J must be >= 0, got {self.J}")

    @property
    def onsite(self) -> np.ndarray:
        j = np.arange(1, self.N + 1)
        return self.h * np.cos(2.0 * np.pi * self.b * j)

    def with_(self, **kw) -> "LatticeParams":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {"N": self.N, "J": self.J, "U": self.U, "h": self.h, "b": self.b,
                "kappa": self.kappa, "gamma": self.gamma, "sigma": self.sigma}


@dataclass(frozen=True)
class TwoParticleBasis:
    """Fock pairs |i,j>, 1 <= i <= j <= N, in lexicographic order."""

    N: int
    states: tuple = field(init=False)
    index_of: dict = field(init=False, repr=False)
    norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        states = tuple((i, j) for i in range(1, self.N + 1) for j in range(i, self.N + 1))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "index_of", {s: k for k, s in enumerate(states)})
        object.__setattr__(self, "norm", np.array([1 / np.sqrt(1 + (i == j)) for i, j in states]))

    @property
    def d2(self) -> int:
        return len(self.states)

    def __len__(self):
        return self.d2

    @cached_property
    def symmetrizer(self) -> np.ndarray:
        """Isometry from the symmetric Fock basis into the N^2 tensor-product space."""
        N = self.N
        S = np.zeros((N * N, self.d2))
        for k, (i, j) in enumerate(self.states):
            a, c = i - 1, j - 1
            if a == c:
                S[a * N + a, k] = 1.0
            else:
                S[a * N + c, k] = S[c * N + a, k] = 1 / np.sqrt(2)
        return S

    @cached_property
    def occupation(self) -> np.ndarray:
        """occupation[k, s] = number of bosons on site s+1 in state k."""
        occ = np.zeros((self.d2, self.N))
        for k, (i, j) in enumerate(self.states):
            occ[k, i - 1] += 1
            occ[k, j - 1] += 1
        return occ

    @cached_property
    def doublons(self) -> np.ndarray:
        return np.array([self.index_of[(j, j)] for j in range(1, self.N + 1)])


@dataclass(frozen=True, eq=False)
class SectorHamiltonian:
    sector: int
    matrix: np.ndarray
    hermitian: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DoublonEffectiveModel:
    matrix: np.ndarray
    hD: float
    JD: np.ndarray
    predicted_transition: float


def build_h1(params: LatticeParams) -> SectorHamiltonian:
    N, J = params.N, params.J
    H = np.diag(params.onsite).astype(float)
    idx = np.arange(N - 1)
    H[idx, idx + 1] = H[idx + 1, idx] = J
    return SectorHamiltonian(1, H, True)


def build_h2(params: LatticeParams, basis: TwoParticleBasis | None = None) -> SectorHamiltonian:
    """Two-boson Hamiltonian in the normalized Fock basis.

    Built in the tensor space as H1 x 1 + 1 x H1 + U sum_j |jj><jj| and projected
    onto the symmetric subspace, which yields the sqrt(2) bosonic factors.
    """
    if basis is None:
        basis = TwoParticleBasis(params.N)
    if basis.N != params.N:
        raise ParameterError("basis size does not match params.N")
    N = params.N
    h1 = build_h1(params).matrix
    eye = np.eye(N)
    Ht = np.kron(h1, eye) + np.kron(eye, h1)
    d = np.arange(N)
    Ht[d * N + d, d * N + d] += params.U
    S = basis.symmetrizer
    H = S.T @ Ht @ S
    H = 0.5 * (H + H.T)
    return SectorHamiltonian(2, H, True)


def _loss_diagonal(params: LatticeParams, sector: int, basis: TwoParticleBasis | None):
    N = params.N
    if sector == 1:
        occ = np.eye(N)
    elif sector == 2:
        occ = (basis or TwoParticleBasis(N)).occupation
    else:
        raise ParameterError(f"sector must be 1 or 2, got {sector}")
    edge = occ[:, 0] + occ[:, N - 1]
    return -0.5j * params.kappa * edge - 0.5j * params.gamma * sector


def build_effective(params: LatticeParams, sector: int, include_loss: bool = True,
                    basis: TwoParticleBasis | None = None) -> SectorHamiltonian:
    """H_sys - i kappa/2 (n_1 + n_N) [- i gamma/2 n_total] in sector 1 or 2."""
    if sector == 1:
        H = build_h1(params).matrix
    elif sector == 2:
        basis = basis or TwoParticleBasis(params.N)
        H = build_h2(params, basis).matrix
    else:
        raise ParameterError(f"sector must be 1 or 2, got {sector}")
    p = params if include_loss else params.with_(gamma=0.0)
    Heff = H.astype(complex) + np.diag(_loss_diagonal(p, sector, basis))
    return SectorHamiltonian(sector, Heff, False)


def build_sw_doublon(params: LatticeParams, tol: float = 1e-9) -> DoublonEffectiveModel:
    """Lowest-order effective Hamiltonian of the doubly-occupied subspace."""
    U, J = params.U, params.J
    if not U > 0:
        raise ParameterError("Schrieffer-Wolff doublon model requires U > 0")
    eps = params.onsite
    de = np.diff(eps)
    denom = U ** 2 - de ** 2
    if np.any(np.abs(denom) <= tol * max(1.0, U ** 2)):
        bad = int(np.argmin(np.abs(denom))) + 1
        raise ResonantDenominator(f"U^2 - (eps_{bad + 1} - eps_{bad})^2 vanishes")
    JD = 2 * J ** 2 * U / denom
    H = np.diag(2 * eps + U).astype(complex)
    k = np.arange(params.N - 1)
    H[k, k + 1] = H[k + 1, k] = JD
    return DoublonEffectiveModel(H, 2 * params.h, JD, 2 * J / U)


def creation_matrix(site: int, N: int, sector: int = 0,
                    basis: TwoParticleBasis | None = None) -> np.ndarray:
    """Matrix of a_site^dagger from sector M to sector M+1 (M in {0, 1})."""
    if not 1 <= site <= N:
        raise ParameterError(f"site must be in [1, {N}], got {site}")
    if sector == 0:
        C = np.zeros((N, 1))
        C[site - 1, 0] = 1.0
        return C
    if sector == 1:
        basis = basis or TwoParticleBasis(N)
        C = np.zeros((basis.d2, N))
        for m in range(1, N + 1):
            k = basis.index_of[(min(site, m), max(site, m))]
            C[k, m - 1] = np.sqrt(2.0) if m == site else 1.0
        return C
    raise ParameterError(f"creation only defined from sectors 0 and 1, got {sector}")


def apply_creation(site: int, vector, N: int, sector: int | None = None,
                   basis: TwoParticleBasis | None = None) -> np.ndarray:
    """a_site^dagger applied to a sector-0 (length 1) or sector-1 (length N) vector.

    The sector is inferred from the vector length unless given (needed for N = 1).
    """
    v = np.asarray(vector).reshape(-1)
    if sector is None:
        sector = 0 if v.size == 1 and N != 1 else 1 if v.size == N else -1
        if N == 1:
            sector = 0
    C = creation_matrix(site, N, sector, basis)
    if C.shape[1] != v.size:
        raise ParameterError(f"vector of length {v.size} does not live in sector {sector}")
    return C @ v


def apply_annihilation(site: int, vector, N: int, sector: int,
                       basis: TwoParticleBasis | None = None) -> np.ndarray:
    """a_site acting on a sector-`sector` vector; the adjoint of apply_creation."""
    C = creation_matrix(site, N, sector - 1, basis)
    v = np.asarray(vector).reshape(-1)
    if C.shape[0] != v.size:
        raise ParameterError(f"vector of length {v.size} does not live in sector {sector}")
    return C.T @ v
