"""Phase-space distributions, pulsed optomechanical tomography and measurement-based cooling."""

from .conditioning import (BathParams, GaussianState, condition_on_outcome, cool_by_measurement,
                           free_evolution, n_eff_closed_form, thermal_gaussian)
from .errors import (AccuracyWarning, NormalizationError, OrderingError, ResolutionError,
                     TruncationError)
from .hilbert import (DensityMatrix, displacement_matrix, make_state, ordered_moment,
                      parity_expectation)
from .phasespace import (Marginal, QuasiProbGrid, char_function, convolve_to_s, marginal,
                         marginal_char, qfunction_point, quasiprob_grid, wigner_point,
                         wigner_quadrature_point)
from .probe import (ProbeParams, PulseConfig, derive_probe_params, homodyne_pdf,
                    linearisation_check, negativity_possible, s_parameter, sample_homodyne)
from .tomography import (ReconstructionConfig, TomogramDataset, compare_grids, estimate_scaled_marginal,
                         invert_marginals, run_protocol)

__version__ = "0.1.0"
