"""Capturing castles over subshifts of finite type and certified perturbation of
locally constant linear cocycles."""

from .errors import *  # noqa: F401,F403
from .shiftspace import (ClopenSet, EventuallyPeriodicPoint, PeriodicOrbit, Sft, SubSft,
                         maximal_invariant, periodic_orbits, point_through, sft_from_forbidden)
from .castles import (Castle, Tower, capturing_tower_periodic, dungeon_castle, high_castle,
                      is_capturing, is_feedback, kakutani_rokhlin, verify_castle)
from .matperturb import kappa, kappa_e, perturb_eigen, perturb_singular
from .cocycle import Cocycle, kappa_trace, remove_qc, required_N, verify_qc_certificate

__all__ = ["ClopenSet", "EventuallyPeriodicPoint", "PeriodicOrbit", "Sft", "SubSft",
           "maximal_invariant", "periodic_orbits", "point_through", "sft_from_forbidden",
           "Castle", "Tower", "capturing_tower_periodic", "dungeon_castle", "high_castle",
           "is_capturing", "is_feedback", "kakutani_rokhlin", "verify_castle",
           "kappa", "kappa_e", "perturb_eigen", "perturb_singular",
           "Cocycle", "kappa_trace", "remove_qc", "required_N", "verify_qc_certificate"]
__version__ = "0.1.0"
