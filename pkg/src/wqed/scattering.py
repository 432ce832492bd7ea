"""Two- and four-point Green's functions of the waveguide-coupled chain and the
resulting one- and two-photon transmission probabilities.

Conventions
-----------
Waveguide labels are "W1" (attached to site 1) and "WN" (attached to site N).
Reduced Green's functions have the momentum delta functions stripped:

    G(p; q)             = -i kappa sum_mu t_mu / (q - xi_mu)
    G(p1, p2; q1, q2)   = G1 + G2   on the shell p1 + p2 = q1 + q2

where xi are eigenvalues of the effective (non-Hermitian) Hamiltonian. The
four-point function is written as

    G(p1, p2; q1, q2) = sum_mu c_mu(p1, p2) [1/(q1 - xi_mu) + 1/(q2 - xi_mu)]

which makes every convolution over the input momenta a sum of closed-form pole
integrals. The 1/(q1 - p1) factor of the one-photon-transition diagram is removed
algebraically by pairing permutations (the principal-value reading); the paired
form has no removable singularity left to evaluate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import IntegrationFailure, ParameterError, ProbabilityOutOfRange
from .model import (LatticeParams, TwoParticleBasis, build_effective, creation_matrix)
from .poles import ReducedAmplitude, integrate_abs2, product
from .spectral import BiorthogonalSpectrum, eig_biorthogonal

log = logging.getLogger(__name__)

WAVEGUIDES = ("W1", "WN")


@dataclass(frozen=True)
class PortPair:
    """Input waveguide and output waveguide(s).

    One-photon quantities use (input_port, output_port). Two-photon quantities
    detect photon p1 in output_port and photon p2 in output_port2 (defaults to
    output_port).
    """

    input_port: str = "W1"
    output_port: str = "WN"
    output_port2: str | None = None

    def __post_init__(self):
        for w in (self.input_port, self.output_port, self.out2):
            if w not in WAVEGUIDES:
                raise ParameterError(f"unknown waveguide {w!r}; expected one of {WAVEGUIDES}")

    @property
    def out2(self) -> str:
        return self.output_port if self.output_port2 is None else self.output_port2

    @property
    def is_reflection(self) -> bool:
        return self.input_port == self.output_port


TRANSMISSION = PortPair("W1", "WN")

ALL_OUTPUT_PAIRS = tuple(PortPair("W1", a, b) for a in WAVEGUIDES for b in WAVEGUIDES)


@dataclass(frozen=True)
class WavepacketSpec:
    center: float
    width: float
    shape: str = "lorentzian"

    def __post_init__(self):
        if self.shape not in ("lorentzian", "delta"):
            raise ParameterError(f"unknown wavepacket shape {self.shape!r}")
        if self.shape == "lorentzian" and not self.width > 0:
            raise ParameterError("lorentzian width must be > 0")

    def amplitude(self, q):
        """chi_k(q) = sqrt(sigma/pi) / (q - k + i sigma)."""
        s = self.width
        return np.sqrt(s / np.pi) / (np.asarray(q) - self.center + 1j * s)

    def as_poles(self) -> ReducedAmplitude:
        s = self.width
        return ReducedAmplitude.from_terms([self.center - 1j * s], [np.sqrt(s / np.pi)])


def normalisation(k1: float, k2: float, sigma: float) -> float:
    """M(k1, k2) = 1 + 4 sigma^2 / ((k1 - k2)^2 + 4 sigma^2)."""
    return 1.0 + 4 * sigma ** 2 / ((k1 - k2) ** 2 + 4 * sigma ** 2)


class GreenEvaluator:
    """Biorthogonal spectra of H_eff in sectors 1 and 2 plus the coupling chains.

    t[(o, i)][mu]   = <0|a_o|xi_mu><xi~_mu|a_i^+|0>
    X[o][nu]        = <0|a_o|xi_nu>
    Y[o][nu, beta]  = <xi~_nu|a_o|xi_beta>
    Z[i][beta, mu]  = <xi~_beta|a_i^+|xi_mu>
    T[i][mu]        = <xi~_mu|a_i^+|0>

    so W_{nu beta mu} = X[od] Y[oc] Z[i] T[i] for a photon emitted first into oc
    and second into od. Instances are immutable after construction.
    """

    def __init__(self, params: LatticeParams, include_loss: bool = True,
                 spectra: tuple[BiorthogonalSpectrum, BiorthogonalSpectrum] | None = None):
        self.params = params
        self.basis = TwoParticleBasis(params.N)
        if spectra is None:
            h1 = build_effective(params, 1, include_loss)
            h2 = build_effective(params, 2, include_loss, self.basis)
            spectra = (eig_biorthogonal(h1), eig_biorthogonal(h2))
        self.spec1, self.spec2 = spectra
        self.xi1 = self.spec1.values
        self.xi2 = self.spec2.values
        N = params.N
        R1, L1 = self.spec1.right, self.spec1.left
        R2, L2 = self.spec2.right, self.spec2.left
        self.site = {"W1": 1, "WN": N}
        self.X, self.T, self.Y, self.Z = {}, {}, {}, {}
        for w, s in self.site.items():
            C = creation_matrix(s, N, 1, self.basis)
            self.X[w] = R1[s - 1, :].copy()
            self.T[w] = L1[:, s - 1].copy()
            self.Y[w] = L1 @ C.T @ R2
            self.Z[w] = L2 @ C @ R1
        self.t = {(o, i): self.X[o] * self.T[i] for o in WAVEGUIDES for i in WAVEGUIDES}

    @property
    def kappa(self) -> float:
        return self.params.kappa

    @property
    def prefactor(self) -> complex:
        return -1j * self.kappa ** 2 / (2 * np.pi)

    def W(self, out_second: str, out_first: str, inp: str) -> np.ndarray:
        """Full d1 x d2 x d1 numerator tensor W_{nu beta mu}."""
        return (self.X[out_second][:, None, None] * self.Y[out_first][:, :, None]
                * self.Z[inp][None, :, :] * self.T[inp][None, None, :])

    # --- one-photon pieces -------------------------------------------------
    def phi(self, out: str, inp: str, x):
        x = np.asarray(x, dtype=complex)
        return np.sum(self.t[(out, inp)] / (x[..., None] - self.xi1), axis=-1)

    def psi(self, out: str, inp: str, x, y):
        """sum_mu t_mu / ((x - xi_mu)(y - xi_mu)); phi(x) - phi(y) = -(x - y) psi(x, y)."""
        return np.sum(self.t[(out, inp)] / ((x - self.xi1) * (y - self.xi1)))

    def s_poles(self, out: str, inp: str) -> ReducedAmplitude:
        """One-photon S-matrix coefficient s(q) = delta_{out,in} + G(q; q) as poles in q."""
        return ReducedAmplitude.from_terms(self.xi1, -1j * self.kappa * self.t[(out, inp)],
                                           1.0 if out == inp else 0.0)

    def phi_poles(self, out: str, inp: str) -> ReducedAmplitude:
        return ReducedAmplitude.from_terms(self.xi1, self.t[(out, inp)])

    # --- two-photon transition -------------------------------------------
    def M_dot(self, out_second: str, out_first: str, inp: str, P: float, w) -> np.ndarray:
        """sum_{beta, mu} W_{nu beta mu} w_mu / (P - xi2_beta), as a vector over nu."""
        v = self.Z[inp] @ (self.T[inp] * w)
        v = self.Y[out_first] @ (v / (P - self.xi2))
        return self.X[out_second] * v


def g2_reduced(q, ports: PortPair, ev: GreenEvaluator):
    """Reduced two-point Green's function -i kappa sum t/(q - xi) (delta stripped)."""
    return -1j * ev.kappa * ev.phi(ports.output_port, ports.input_port, q)


def s1_element(q, ports: PortPair, ev: GreenEvaluator) -> tuple[int, complex]:
    """One-photon S-matrix element as (identity coefficient, smooth part)."""
    return (1 if ports.is_reflection else 0), g2_reduced(q, ports, ev)


def one_photon_coefficient(q, ports: PortPair, ev: GreenEvaluator):
    ident, smooth = s1_element(q, ports, ev)
    return ident + smooth


def _check_shell(p1, p2, q1, q2):
    scale = max(1.0, abs(p1), abs(p2), abs(q1), abs(q2))
    if abs(p1 + p2 - q1 - q2) > 1e-9 * scale:
        raise ParameterError("four-point functions need p1 + p2 = q1 + q2")


def g4_g1(p1, p2, q1, q2, ports: PortPair, ev: GreenEvaluator) -> complex:
    """One-photon-transition diagram with permutations paired so that 1/(q - p)
    cancels analytically:

        [phi1(q1) phi2(p2) - phi1(p1) phi2(q2)] / (q1 - p1)
            = -phi2(p2) psi1(q1, p1) - phi1(p1) psi2(p2, q2)
    and likewise for the (q1, p2) pairing.
    """
    _check_shell(p1, p2, q1, q2)
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    f1p1 = ev.phi(o1, i, p1)
    f2p2 = ev.phi(o2, i, p2)
    total = -(f2p2 * ev.psi(o1, i, q1, p1) + f1p1 * ev.psi(o2, i, p2, q2)
              + f1p1 * ev.psi(o2, i, q1, p2) + f2p2 * ev.psi(o1, i, p1, q2))
    return complex(ev.prefactor * total)


def g4_g1_unpaired(p1, p2, q1, q2, ports: PortPair, ev: GreenEvaluator) -> complex:
    """Literal four-permutation sum; singular at q1 = p1 or q1 = p2. Reference only."""
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    total = 0j
    for qa, qb in ((q1, q2), (q2, q1)):
        # p1 emitted first (port o1), then p2 (port o2) and vice versa
        total += ev.phi(o1, i, qa) * ev.phi(o2, i, p2) / (qa - p1)
        total += ev.phi(o2, i, qa) * ev.phi(o1, i, p1) / (qa - p2)
    return complex(ev.prefactor * total)


def g4_g2(p1, p2, q1, q2, ports: PortPair, ev: GreenEvaluator) -> complex:
    """Two-photon-transition diagram through the 2-particle eigenstates."""
    _check_shell(p1, p2, q1, q2)
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    P = q1 + q2
    w = 1 / (q1 - ev.xi1) + 1 / (q2 - ev.xi1)
    a1 = 1 / (p1 - ev.xi1)
    a2 = 1 / (p2 - ev.xi1)
    total = a2 @ ev.M_dot(o2, o1, i, P, w) + a1 @ ev.M_dot(o1, o2, i, P, w)
    return complex(ev.prefactor * total)


def g4_total(p1, p2, q1, q2, ports: PortPair, ev: GreenEvaluator) -> complex:
    return g4_g1(p1, p2, q1, q2, ports, ev) + g4_g2(p1, p2, q1, q2, ports, ev)


def connected_in_p1(P: float, w: np.ndarray, ports: PortPair, ev: GreenEvaluator) -> ReducedAmplitude:
    """sum_mu w_mu c_mu(p1, P - p1) as a rational function of p1.

    With w_mu = 1/(q1 - xi_mu) + 1/(q2 - xi_mu) this is G(p1, P - p1; q1, q2);
    with w_mu the closed-form wavepacket convolution it is the convolved amplitude.
    """
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    xi = ev.xi1
    m21 = ev.M_dot(o2, o1, i, P, w)
    m12 = ev.M_dot(o1, o2, i, P, w)
    two_photon = ReducedAmplitude(xi.copy(), m12) + ReducedAmplitude(P - xi, -m21)
    # -phi_o2(P - p1) * sum_mu w t1_mu / (p1 - xi)
    c1 = product([ev.phi_poles(o2, i).reflect(P),
                  ReducedAmplitude(xi, w * ev.t[(o1, i)])])
    # -phi_o1(p1) * sum_mu w t2_mu / (P - p1 - xi)
    c2 = product([ev.phi_poles(o1, i),
                  ReducedAmplitude(xi, w * ev.t[(o2, i)]).reflect(P)])
    out = two_photon + c1.scale(-1) + c2.scale(-1)
    return out.scale(ev.prefactor)


def connected_in_p1_two_photon_only(P: float, w, ports: PortPair, ev: GreenEvaluator) -> ReducedAmplitude:
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    xi = ev.xi1
    m21 = ev.M_dot(o2, o1, i, P, w)
    m12 = ev.M_dot(o1, o2, i, P, w)
    return (ReducedAmplitude(xi.copy(), m12) + ReducedAmplitude(P - xi, -m21)).scale(ev.prefactor)


def wavepacket_weights(k1: float, k2: float, sigma: float, P: float, xi: np.ndarray) -> np.ndarray:
    """Closed form of int dq chi_k1(q) chi_k2(P - q) [1/(q - xi) + 1/(P - q - xi)].

    Only the chi_k2(P - q) pole at q = P - k2 + i sigma lies in the upper half-plane
    for the first term, giving -2 i sigma / ((P - k1 - k2 + 2 i sigma)(P - k2 + i sigma - xi));
    the second term is the same with k1 and k2 exchanged.
    """
    env = -2j * sigma / (P - k1 - k2 + 2j * sigma)
    return env * (1 / (P - k2 + 1j * sigma - xi) + 1 / (P - k1 + 1j * sigma - xi))


def _real_line_quad(f, breakpoints, scale, epsrel, vector=False, limit=400):
    """Integrate f over the real line split at sorted breakpoints."""
    pts = np.unique(np.round(np.asarray(breakpoints, float), 14))
    lo, hi = pts[0] - 50 * scale, pts[-1] + 50 * scale
    edges = np.concatenate([[lo], pts, [hi]])
    segments = [(-np.inf, lo)] + list(zip(edges[:-1], edges[1:])) + [(hi, np.inf)]
    total, err = 0.0, 0.0
    for a, b in segments:
        if b <= a:
            continue
        if vector:
            val, e = integrate.quad_vec(f, a, b, epsrel=epsrel, epsabs=0, limit=limit)
            e = float(np.max(np.abs(e)))
        else:
            val, e = integrate.quad(f, a, b, epsrel=epsrel, epsabs=0, limit=limit)
        total = total + val
        err += e
    return total, err


def wavepacket_weights_quadrature(k1, k2, sigma, P, xi, epsrel=1e-10):
    chi1 = WavepacketSpec(k1, sigma)
    chi2 = WavepacketSpec(k2, sigma)

    def f(q):
        env = chi1.amplitude(q) * chi2.amplitude(P - q)
        v = env * (1 / (q - xi) + 1 / (P - q - xi))
        return np.concatenate([v.real, v.imag])

    pts = [k1, P - k2, *xi.real, *(P - xi.real)]
    val, err = _real_line_quad(f, pts, max(sigma, 1e-3), epsrel, vector=True)
    n = xi.size
    out = val[:n] + 1j * val[n:]
    if err > 1e-6 * max(1e-300, float(np.max(np.abs(out)))):
        raise IntegrationFailure(f"wavepacket convolution did not converge (err {err:.2e})")
    return out


def disconnected_amplitude(p1, p2, k1, k2, sigma, ports: PortPair, ev: GreenEvaluator) -> complex:
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    c1, c2 = WavepacketSpec(k1, sigma), WavepacketSpec(k2, sigma)
    s1 = one_photon_coefficient(p1, PortPair(i, o1), ev)
    s2 = one_photon_coefficient(p2, PortPair(i, o2), ev)
    return complex(s1 * s2 * (c1.amplitude(p1) * c2.amplitude(p2) + c1.amplitude(p2) * c2.amplitude(p1)))


def output_amplitude(p1, p2, k1, k2, sigma, ports: PortPair, ev: GreenEvaluator,
                     convolution: str = "residue") -> complex:
    """<0|b_p1 b_p2 S B_k1^+ B_k2^+|0> (before the 1/sqrt(M) input normalisation)."""
    P = p1 + p2
    if convolution == "residue":
        w = wavepacket_weights(k1, k2, sigma, P, ev.xi1)
    elif convolution == "quadrature":
        w = wavepacket_weights_quadrature(k1, k2, sigma, P, ev.xi1)
    else:
        raise ParameterError(f"unknown convolution method {convolution!r}")
    conn = connected_in_p1(P, w, ports, ev)(p1)
    return disconnected_amplitude(p1, p2, k1, k2, sigma, ports, ev) + complex(conn)


def rho_conditional(p1, p2, k1, k2, sigma, ports: PortPair, ev: GreenEvaluator,
                    convolution: str = "residue") -> float:
    """Conditional two-photon detection density |A(p1, p2)|^2 / M(k1, k2)."""
    if not sigma > 0:
        raise ParameterError("rho_conditional needs a Lorentzian width sigma > 0")
    A = output_amplitude(p1, p2, k1, k2, sigma, ports, ev, convolution)
    return abs(A) ** 2 / normalisation(k1, k2, sigma)


def amplitude_in_p1(P, k1, k2, sigma, ports: PortPair, ev: GreenEvaluator) -> ReducedAmplitude:
    """Full output amplitude A(p1, P - p1) as a rational function of p1."""
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    c1, c2 = WavepacketSpec(k1, sigma).as_poles(), WavepacketSpec(k2, sigma).as_poles()
    s1 = ev.s_poles(o1, i)
    s2r = ev.s_poles(o2, i).reflect(P)
    disc = (product([s1, s2r, c1, c2.reflect(P)])
            + product([s1, s2r, c2, c1.reflect(P)]))
    w = wavepacket_weights(k1, k2, sigma, P, ev.xi1)
    return disc + connected_in_p1(P, w, ports, ev)


def abs2_integral_in_p1(P, k1, k2, sigma, ports: PortPair, ev: GreenEvaluator) -> np.ndarray:
    """int dp1 |A(p1, P - p1)|^2 for an array of total momenta P, by residues.

    Same result as integrate_abs2(amplitude_in_p1(...)) but batched over P. The
    poles of A in p1 split into a lower set (xi, k1 - i sigma, k2 - i sigma) and an
    upper set (P - xi, P - k1 + i sigma, P - k2 + i sigma). Within each set the pair
    denominators z_j - conj(z_l) do not depend on P, so the integral is a fixed
    Hermitian form in the residue vectors.
    """
    P = np.atleast_1d(np.asarray(P, dtype=float))[:, None]
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    xi = ev.xi1
    kap = ev.kappa
    t1, t2 = ev.t[(o1, i)], ev.t[(o2, i)]
    d1 = 1.0 if o1 == i else 0.0
    d2 = 1.0 if o2 == i else 0.0
    c = np.sqrt(sigma / np.pi)
    za, zb = k1 - 1j * sigma, k2 - 1j * sigma

    def phi(t, x):
        return np.sum(t / (x[..., None] - xi), axis=-1)

    s1 = lambda x: d1 - 1j * kap * phi(t1, x)
    s2 = lambda x: d2 - 1j * kap * phi(t2, x)
    chi1 = lambda x: c / (x - k1 + 1j * sigma)
    chi2 = lambda x: c / (x - k2 + 1j * sigma)

    # one-photon functions at P - xi_mu all come from 1 / (P - xi_mu - xi_nu)
    inv = 1.0 / (P[..., None] - xi[:, None] - xi[None, :])
    f1_Pxi = inv @ t1
    f2_Pxi = inv @ t2
    s1_Pxi = d1 - 1j * kap * f1_Pxi
    s2_Pxi = d2 - 1j * kap * f2_Pxi
    sym_xi = chi1(xi) * chi2(P - xi) + chi2(xi) * chi1(P - xi)
    sym_Pxi = chi1(P - xi) * chi2(xi) + chi2(P - xi) * chi1(xi)

    # disconnected part s1(p1) s2(P - p1) [chi1(p1) chi2(P - p1) + chi2(p1) chi1(P - p1)]
    rl_x = -1j * kap * t1 * s2_Pxi * sym_xi
    ru_x = 1j * kap * t2 * s1_Pxi * sym_Pxi
    Pa, Pb = P - za, P - zb
    rl_a = c * s1(np.full_like(P, za, dtype=complex)) * s2(Pa) * chi2(Pa)
    rl_b = c * s1(np.full_like(P, zb, dtype=complex)) * s2(Pb) * chi1(Pb)
    # p1 = P - k1 + i sigma from chi1(P - p1), p1 = P - k2 + i sigma from chi2(P - p1)
    ru_a = -c * s1(Pa) * s2(np.full_like(P, za, dtype=complex)) * chi2(Pa)
    ru_b = -c * s1(Pb) * s2(np.full_like(P, zb, dtype=complex)) * chi1(Pb)

    # connected part, scaled by the four-point prefactor
    w = wavepacket_weights(k1, k2, sigma, P, xi)
    pref = ev.prefactor
    v = ((ev.T[i] * w) @ ev.Z[i].T) / (P - ev.xi2)
    m12 = ev.X[o1] * (v @ ev.Y[o2].T)
    m21 = ev.X[o2] * (v @ ev.Y[o1].T)
    wt1 = inv @ (w * t1)[..., None]
    wt2 = inv @ (w * t2)[..., None]
    rl_x = rl_x + pref * (m12 - w * t1 * f2_Pxi - t1 * wt2[..., 0])
    ru_x = ru_x + pref * (-m21 + t2 * wt1[..., 0] + f1_Pxi * w * t2)

    zl = np.concatenate([xi, [za, zb]])
    zu = np.concatenate([-xi, [-za, -zb]])     # upper poles are P + zu
    rl = np.concatenate([rl_x, rl_a, rl_b], axis=1)
    ru = np.concatenate([ru_x, ru_a, ru_b], axis=1)
    Kl = -2j * np.pi / (zl[:, None] - zl.conj()[None, :])
    Ku = 2j * np.pi / (zu[:, None] - zu.conj()[None, :])
    total = np.einsum("kj,jl,kl->k", rl, Kl, rl.conj()) + np.einsum("kj,jl,kl->k", ru, Ku, ru.conj())
    return total.real


def _finalise_probability(value: float, what: str) -> float:
    if value > 1 + 1e-6:
        raise ProbabilityOutOfRange(f"{what} = {value!r} exceeds 1")
    if value < -1e-6:
        raise ProbabilityOutOfRange(f"{what} = {value!r} is negative")
    if value < 0:
        log.warning("%s = %.3e clamped to 0", what, value)
        return 0.0
    return value


def transmission_probability(k1, k2, sigma, ports: PortPair, ev: GreenEvaluator,
                             rel_tol: float = 1e-6, inner: str = "residue",
                             max_subdivisions: int = 200) -> float:
    """P(k1, k2) = (1/2) int dp1 dp2 rho for Lorentzian inputs of width sigma.

    The total output momentum P = p1 + p2 carries the Lorentzian envelope of the
    input (half-width 2 sigma), so the outer integral uses P = k1 + k2 + 2 sigma tan(theta)
    on (-pi/2, pi/2), split at the images of the one- and two-particle resonances.
    With inner="residue" the p1 integral of |A|^2 is closed-form and all segments are
    integrated together by tanh-sinh; inner="quadrature" does both integrals with
    adaptive Gauss-Kronrod (slow, a cross-check).
    """
    if not sigma > 0:
        raise ParameterError("transmission_probability needs sigma > 0")
    if inner not in ("residue", "quadrature"):
        raise ParameterError(f"unknown inner integration method {inner!r}")
    K = k1 + k2
    w2 = 2 * sigma
    half = 0.5 * np.pi
    feats = np.concatenate([k1 + ev.xi1.real, k2 + ev.xi1.real, ev.xi2.real, [K]])
    pts = np.unique(np.round(np.arctan((feats - K) / w2), 12))
    pts = pts[np.abs(pts) < half - 1e-9]

    if inner == "residue":
        def outer(theta):
            th = np.asarray(theta, dtype=float)
            P = K + w2 * np.tan(th.ravel())
            val = abs2_integral_in_p1(P, k1, k2, sigma, ports, ev) * w2 / np.cos(th.ravel()) ** 2
            return val.reshape(th.shape)

        edges = np.concatenate([[-half], pts, [half]])
        a, b = edges[:-1], edges[1:]
        # a coarse pass sets the absolute scale so negligible segments stop early
        rough = integrate.tanhsinh(outer, a, b, rtol=1e-3, maxlevel=2)
        scale = abs(float(np.sum(rough.integral)))
        res = integrate.tanhsinh(outer, a, b, rtol=0.5 * rel_tol, minlevel=1, maxlevel=8,
                                 atol=0.5 * rel_tol * scale / a.size)
        val, err = float(np.sum(res.integral)), float(np.sum(res.error))
        # status -2 (refinement limit) is tolerated on segments whose error is negligible;
        # the summed error estimate below decides
        bad = (res.status != 0) & (res.status != -2)
        if np.any(bad):
            raise IntegrationFailure(f"outer integral: {int(bad.sum())} segments returned non-finite values")
    else:
        def inner_quad(P):
            f = lambda p1: abs(output_amplitude(p1, P - p1, k1, k2, sigma, ports, ev)) ** 2
            bps = [k1, k2, P - k1, P - k2, *ev.xi1.real, *(P - ev.xi1.real)]
            v, _ = _real_line_quad(f, bps, max(sigma, 1e-3), rel_tol * 1e-2)
            return v

        def outer(theta):
            return inner_quad(K + w2 * math.tan(theta)) * w2 / math.cos(theta) ** 2

        # every breakpoint opens an interval, so the bisection budget comes on top of them
        val, err = integrate.quad(outer, -half, half, epsrel=rel_tol, epsabs=0,
                                  limit=max_subdivisions + pts.size + 1, points=pts)
    if not np.isfinite(val) or err > rel_tol * max(abs(val), 1e-300):
        raise IntegrationFailure(f"outer integral error {err:.2e} for value {val:.3e}")
    value = 0.5 * val / normalisation(k1, k2, sigma)
    return _finalise_probability(value, "P(k1, k2)")


def delta_pulse_probability(k1, k2, ports: PortPair, ev: GreenEvaluator,
                            sigma: float | None = None, resonant_only: bool = False) -> float:
    """Narrow-pulse limit of transmission_probability.

    For sigma -> 0 the Lorentzian result tends to

        disc + (2 pi sigma / 2M) [2 Re(conj(a) G(k1,k2;k1,k2) + conj(b) G(k2,k1;k1,k2))
                                  + int dp |G(p, K - p; k1, k2)|^2]

    with a = s1(k1) s2(k2), b = s1(k2) s2(k1) and disc the one-photon product term.
    The connected terms carry the factor 2 pi sigma (the photon overlap time ~ 1/sigma),
    so sigma defaults to the evaluator's wavepacket width. `resonant_only` keeps only
    the two-photon-transition integral.
    """
    sigma = ev.params.sigma if sigma is None else sigma
    i, o1, o2 = ports.input_port, ports.output_port, ports.out2
    K = k1 + k2
    Mn = normalisation(k1, k2, sigma)
    w = 1 / (k1 - ev.xi1) + 1 / (k2 - ev.xi1)
    weight = 2 * np.pi * sigma / (2 * Mn)
    if resonant_only:
        G = connected_in_p1_two_photon_only(K, w, ports, ev)
        return _finalise_probability(weight * integrate_abs2(G.compress()), "P_resonant")
    s1 = lambda x: one_photon_coefficient(x, PortPair(i, o1), ev)
    s2 = lambda x: one_photon_coefficient(x, PortPair(i, o2), ev)
    a = s1(k1) * s2(k2)
    b = s1(k2) * s2(k1)
    disc = (abs(a) ** 2 + abs(b) ** 2 + 2 * (a * np.conj(b)).real * (Mn - 1)) / (2 * Mn)
    G = connected_in_p1(K, w, ports, ev)
    cross = 2 * (np.conj(a) * G(k1) + np.conj(b) * G(k2)).real
    value = float(disc + weight * (cross + integrate_abs2(G.compress())))
    return _finalise_probability(value, "P_delta(k1, k2)")


def two_photon_probability(k1, k2, ports: PortPair, ev: GreenEvaluator, pulse: str = "lorentzian",
                           rel_tol: float = 1e-6, max_subdivisions: int = 200) -> float:
    if pulse == "lorentzian":
        return transmission_probability(k1, k2, ev.params.sigma, ports, ev, rel_tol,
                                        max_subdivisions=max_subdivisions)
    if pulse == "delta":
        return delta_pulse_probability(k1, k2, ports, ev)
    raise ParameterError(f"unknown pulse mode {pulse!r}")
