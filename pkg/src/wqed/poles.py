"""Pole-residue arithmetic for proper rational functions of one real variable.

A ReducedAmplitude stores f(x) = const + sum_j r_j / (x - z_j). Products assume the
factors have pairwise distinct poles, so the residue of a product at a pole of one
factor is that factor's residue times the other factors evaluated there.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ReducedAmplitude:
    poles: np.ndarray
    residues: np.ndarray
    const: complex = 0.0

    @classmethod
    def from_terms(cls, poles, residues, const=0.0) -> "ReducedAmplitude":
        return cls(np.asarray(poles, dtype=complex).ravel(),
                   np.asarray(residues, dtype=complex).ravel(), complex(const))

    @classmethod
    def constant(cls, c) -> "ReducedAmplitude":
        return cls(np.zeros(0, complex), np.zeros(0, complex), complex(c))

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        terms = self.residues / (x[..., None] - self.poles)
        return self.const + terms.sum(axis=-1)

    def __add__(self, other: "ReducedAmplitude") -> "ReducedAmplitude":
        return ReducedAmplitude(np.concatenate([self.poles, other.poles]),
                                np.concatenate([self.residues, other.residues]),
                                self.const + other.const)

    def scale(self, c) -> "ReducedAmplitude":
        return ReducedAmplitude(self.poles, self.residues * c, self.const * c)

    def reflect(self, total: float) -> "ReducedAmplitude":
        """x -> f(total - x)."""
        return ReducedAmplitude(total - self.poles, -self.residues, self.const)

    def __mul__(self, other: "ReducedAmplitude") -> "ReducedAmplitude":
        return product([self, other])

    def compress(self) -> "ReducedAmplitude":
        """Merge entries that share exactly the same pole."""
        if self.poles.size == 0:
            return self
        uniq, inv = np.unique(self.poles, return_inverse=True)
        res = np.zeros(uniq.size, complex)
        np.add.at(res, inv, self.residues)
        return ReducedAmplitude(uniq, res, self.const)


def product(factors: list[ReducedAmplitude]) -> ReducedAmplitude:
    poles, residues = [], []
    const = 1.0 + 0j
    for k, f in enumerate(factors):
        const *= f.const
        if f.poles.size == 0:
            continue
        r = f.residues.copy()
        for m, g in enumerate(factors):
            if m != k:
                r = r * g(f.poles)
        poles.append(f.poles)
        residues.append(r)
    if not poles:
        return ReducedAmplitude.constant(const)
    return ReducedAmplitude(np.concatenate(poles), np.concatenate(residues), const)


def integrate_abs2(f: ReducedAmplitude, real_axis_tol: float = 0.0) -> float:
    """Integral over the real line of |f(x)|^2 by residues.

    Needs const == 0 and no poles on the real axis. The cross term
    r_j conj(r_l) / ((x - z_j)(x - conj z_l)) is nonzero only when z_j and z_l lie
    in the same half-plane: 2 pi i / (z_j - conj z_l) for both in the upper one and
    2 pi i / (conj z_l - z_j) for both in the lower one.
    """
    if f.const != 0:
        raise ValueError("|f|^2 is not integrable: nonzero constant part")
    z, r = f.poles, f.residues
    keep = r != 0
    z, r = z[keep], r[keep]
    if np.any(np.abs(z.imag) <= real_axis_tol):
        raise ValueError("pole on the real axis")
    total = 0.0 + 0j
    for side, sign in ((z.imag > 0, 1.0), (z.imag < 0, -1.0)):
        zs, rs = z[side], r[side]
        if zs.size:
            D = zs[:, None] - zs.conj()[None, :]
            total += sign * np.sum(rs[:, None] * rs.conj()[None, :] * (2j * np.pi) / D)
    return float(total.real)
