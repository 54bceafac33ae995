"""Anyon models and the splitting of their topological degeneracy by charge tunneling."""
from .errors import AnyonModelError, UnknownChargeError, UnsupportedOperationError
from .fsymbols import (FBlock, FSymbolTable, f_aeb_from_f, f_general, f_move, verify_pentagon,
                       verify_unitarity)
from .fusion import (FusionRules, QuantumDimensions, check_tunneling_count, fuse,
                     quantum_dimensions, tunneling_charges)
from .models import (AnyonModel, derive_s_matrix, make_fibonacci, make_ising, make_su2k,
                     monodromy_scalar)
from .perturbation import (EffectiveAmplitudes, GeneralInteraction, MonodromySpec,
                           SplittingResult, TMatrix, TunnelingSpec, build_t_matrix, decay_model,
                           effective_amplitudes, interaction_spectrum, splitting_spectrum,
                           v2_spectrum, v2_to_effective)

__version__ = '0.1.0'
