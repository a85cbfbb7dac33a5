"""
quenchlab: a numerical laboratory for directionally quenched
cubic-quintic Cahn-Hilliard dynamics in a 2D channel.

Subpackages cover the pseudospectral grid, the quenched model, far-field
dispersion and spreading speeds, weighted eigensolves and Hopf location,
the O(2)-Hopf Lyapunov-Schmidt reduction, direct simulation with
adiabatic continuation, and a CLI of canned experiment scenarios.
"""

from .grid import ChannelGrid, Field, ModalProfile, make_grid
from .model import FrontProfile, ModelSpec, quench_h, trivial_front
from .dispersion import (DispersionParams, DoubleRoot, NoSpreadingSpeed,
                         branch_point_track, essential_curve,
                         spreading_speed)
from .linop import (EigenPair, HopfData, ModalOperator, SpectrumSet,
                    hopf_locate, k_scan)
from .reduction import LSReport, PhiSet, classify, ls_report, theta_coeffs
from .sim import (ContinuationBranch, SimState, Stepper,
                  adiabatic_continuation, checkpoint_load, checkpoint_save,
                  classify_pattern, relax, seed)
from .config import ExperimentConfig, parse_config
from .scenarios import RunManifest, run_scenario

__version__ = "0.1.0"
