"""Action-minimizing periodic orbits of the planar three-body problem with an
alpha-homogeneous potential: the figure-eight class, collinear collision
orbits and the local deformations around binary collisions."""
from .dynamics import (Alpha, CollisionError, MassTriple, accelerations, angular_momentum,
                       center, energy, kinetic_energy, moment_of_inertia, potential_energy)
from .minimize import SolveConfig, SolveResult, minimize, multistart
from .orbit import (FullOrbit, Thresholds, VerificationReport, extend_reflect, extend_twist,
                    orbit_from_quarter, polish, verify)
from .path import (DiscretePath, OmegaParams, OmegaProblem, action, action_gradient, decode,
                   encode, graded_times, uniform_times)
from .schubart import (CollinearPath, ConditionReport, build_schubart, condition_test,
                       minimize_collinear, sundman_fit)
from .shape import ShapePoint, SyzygySequence, landmarks, project, reduce_sequence

__version__ = "0.1.0"
