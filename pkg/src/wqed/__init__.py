"""Two-photon transport through a quasiperiodic Bose-Hubbard chain between two waveguides."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .model import (GOLDEN, LatticeParams, TwoParticleBasis, apply_annihilation, apply_creation,  # noqa: E402
                    build_effective, build_h1, build_h2, build_sw_doublon)
from .spectral import (eig_biorthogonal, eig_hermitian, participation_ratio,  # noqa: E402
                       pr_inverse_via_residues)
from .scattering import (ALL_OUTPUT_PAIRS, TRANSMISSION, GreenEvaluator, PortPair,  # noqa: E402
                         delta_pulse_probability, transmission_probability, two_photon_probability)
from .observables import (build_evaluators, effective_lambda2, loss_sweep, mobility_map,  # noqa: E402
                          scaling_curves, t2, t2_coherent)
