"""Time-domain oracle for the Green's functions.

Resolvents are obtained as Laplace transforms of the propagator,

    (E - H)^-1 = -i int_0^inf dt exp(i E t) exp(-i H t),

with exp(-i H t) built by repeated multiplication of one matrix-exponential step
on a uniform grid and the integral done by Simpson's rule. Nothing here touches
the biorthogonal eigenvectors used by the spectral formulas.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import InsufficientDecay, ParameterError
from .model import LatticeParams, TwoParticleBasis, build_effective, creation_matrix
from .scattering import PortPair


def _simpson_weights(n: int, dt: float) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return w * dt / 3


class TimeDomainOracle:
    def __init__(self, params: LatticeParams, tmax: float | None = None, nsteps: int = 2 ** 14,
                 decay_target: float = 25.0, include_loss: bool = True):
        if params.N > 4:
            raise ParameterError("time-domain oracle is limited to N <= 4")
        if nsteps % 2:
            nsteps += 1
        self.params = params
        self.basis = TwoParticleBasis(params.N)
        self.H1 = build_effective(params, 1, include_loss).matrix
        self.H2 = build_effective(params, 2, include_loss, self.basis).matrix
        slowest = min(np.abs(np.linalg.eigvals(self.H1).imag).min(),
                      np.abs(np.linalg.eigvals(self.H2).imag).min())
        if tmax is None:
            if slowest <= 0:
                raise InsufficientDecay("a mode does not decay; no finite tmax suffices")
            tmax = decay_target / slowest
        if tmax * slowest < 20:
            raise ParameterError(f"tmax * min|Im xi| = {tmax * slowest:.3g} < 20")
        # keep the phase advance per step small for the fastest frequency
        fastest = max(np.abs(np.linalg.eigvals(self.H1)).max(), np.abs(np.linalg.eigvals(self.H2)).max())
        nsteps = max(nsteps, int(2 * np.ceil(tmax * (fastest + 4.0) / 0.2 / 2)))
        self.tmax, self.nsteps = float(tmax), nsteps
        self.dt = self.tmax / nsteps
        self.t = np.linspace(0.0, self.tmax, nsteps + 1)
        self.U1 = self._propagators(self.H1)
        self.U2 = self._propagators(self.H2)
        self.w = _simpson_weights(nsteps, self.dt)

    def _propagators(self, H):
        step = expm(-1j * H * self.dt)
        d = H.shape[0]
        U = np.empty((self.nsteps + 1, d, d), dtype=complex)
        U[0] = np.eye(d)
        for n in range(1, self.nsteps + 1):
            U[n] = step @ U[n - 1]
        tail = np.abs(U[-1]).max()
        if tail > 1e-8:
            raise InsufficientDecay(f"propagator norm {tail:.2e} at tmax has not decayed below 1e-8")
        return U

    def resolvent(self, E, sector: int) -> np.ndarray:
        """(E - H_eff)^-1 for real E (scalar or array) from the time grid."""
        U = self.U1 if sector == 1 else self.U2
        E = np.atleast_1d(np.asarray(E, dtype=float))
        phase = np.exp(1j * np.outer(E, self.t)) * self.w
        d = U.shape[1]
        out = -1j * (phase @ U.reshape(len(self.t), d * d))
        return out.reshape(E.size, d, d)

    def _site(self, w: str) -> int:
        return 1 if w == "W1" else self.params.N

    def phi(self, out: str, inp: str, x) -> np.ndarray:
        R = self.resolvent(x, 1)
        return R[:, self._site(out) - 1, self._site(inp) - 1]

    def g2(self, q, ports: PortPair) -> np.ndarray:
        return -1j * self.params.kappa * self.phi(ports.output_port, ports.input_port, q)

    def g4(self, p1, p2, q1, q2, ports: PortPair) -> tuple[complex, complex]:
        """(G1, G2) at a non-coincident on-shell point (q1 != p1, q1 != p2)."""
        if min(abs(q1 - p1), abs(q1 - p2)) < 1e-6:
            raise ParameterError("oracle needs q1 away from p1 and p2")
        kap = self.params.kappa
        pref = -1j * kap ** 2 / (2 * np.pi)
        i, o1, o2 = ports.input_port, ports.output_port, ports.out2
        si = self._site(i)
        N = self.params.N
        g1 = 0j
        for qa in (q1, q2):
            g1 += self.phi(o1, i, qa)[0] * self.phi(o2, i, p2)[0] / (qa - p1)
            g1 += self.phi(o2, i, qa)[0] * self.phi(o1, i, p1)[0] / (qa - p2)

        Cin = creation_matrix(si, N, 1, self.basis)
        e_in = np.zeros(N)
        e_in[si - 1] = 1.0
        P = q1 + q2
        R2 = self.resolvent(P, 2)[0]
        g2 = 0j
        for qa in (q1, q2):
            ket = R2 @ (Cin @ (self.resolvent(qa, 1)[0] @ e_in))
            for first, pd, second in ((o1, p2, o2), (o2, p1, o1)):
                # emit into `first`, then propagate with the remaining momentum pd
                Cf = creation_matrix(self._site(first), N, 1, self.basis)
                v = self.resolvent(pd, 1)[0] @ (Cf.T @ ket)
                g2 += v[self._site(second) - 1]
        return complex(pref * g1), complex(pref * g2)


def time_domain_oracle(ports: PortPair, tmax: float | None, nsteps: int, params: LatticeParams,
                       q_points=(), shells=()) -> dict:
    """Sample the two-point function at q_points and (G1, G2) on each (p1, p2, q1, q2) shell."""
    oracle = TimeDomainOracle(params, tmax, nsteps)
    out = {"tmax": oracle.tmax, "nsteps": oracle.nsteps}
    out["g2"] = oracle.g2(np.asarray(q_points, float), ports) if len(q_points) else np.zeros(0, complex)
    out["g4"] = [oracle.g4(*s, ports) for s in shells]
    return out
