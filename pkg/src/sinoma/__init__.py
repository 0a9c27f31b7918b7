"""Grant-free NOMA uplink receiver built on sinusoidal spreading codes.

The library covers the full chain: scenario synthesis (deployment,
activity, Rayleigh fading, noise), the subspace receiver (forward-
backward snapshots, information-criterion order selection, ESPRIT,
optional variable-projection ML refinement), joint channel/data
estimation with a reliability gate, and a seeded Monte-Carlo harness
with CSV output. See the ``sinoma`` CLI for the file-based workflow.
"""

__version__ = "0.1.0"

from .codes import (CodebookConfig, code_matrix, frequency_to_index,
                    spreading_sequence, steering_matrix, steering_vector,
                    user_frequency)
from .errors import (DegenerateGainError, EstimationFailureError,
                     InvalidInputError, PhaseAmbiguousError,
                     RankDeficiencyError, SinomaError)
from .esprit import (FrequencyEstimate, SubspaceEstimate, detect_users,
                     esprit_frequencies, round_to_indices, signal_subspace)
from .estimator import (GainMatrix, UserEstimate, detect_symbols,
                        estimate_gains, estimate_user, log_magnitude,
                        phase_base, reliability, reliability_threshold,
                        resolve_phase)
from .harness import (MetricsRecord, ReceiverOutput, TrialResult,
                      false_alarm_rate, mdr, nser, rmse_ce, run_receiver,
                      run_trial, sweep, write_results_csv)
from .linalg import eigenvalues, least_squares, singular_triplets
from .order import (OrderSelection, aic_penalty, bic_penalty,
                    estimate_num_active, log_likelihood)
from .scenario import (GroundTruth, ReceivedSignal, SystemConfig,
                       generate_opportunity, load_dataset, noise_variance,
                       path_loss_variance, place_users, rng_for,
                       sample_truth, save_dataset, seed_sequence, synthesize)
from .snapshots import (SnapshotMatrix, backward_extend, build_data_matrix,
                        default_snapshot_len, frame_snapshots)
from .varpro import (RefineOptions, RefineResult, refine_ml, varpro_cost,
                     varpro_gradient)
