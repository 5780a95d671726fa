"""Witness-readout schedule networks on small qubit registers.

Time-dependent transverse-field Ising schedules are trained by gradient
descent so that a squared sigma_z-product readout reproduces entanglement
witness values, then analyzed through Fourier fits and noise/size sweeps.
"""

from .analysis import (DEFAULT_FIT_ORDERS, FourierFit, coefficients_vs_noise,
                       fit_parameter_series, fourier_fit, noise_for_channel,
                       r2_vs_qubits, r_squared)
from .dynamics import (DEFAULT_N_STEPS, DEFAULT_T_FINAL, ParameterSchedule, TimeGrid,
                       build_hamiltonian, propagate, read_schedule, step_unitary,
                       write_schedule)
from .errors import ConfigError, DegenerateInputError, DivergenceError, QnnsimError
from .harness import ExperimentConfig, __version__, load_config, main, resolve_config, run
from .kernels import backend_name
from .learning import (LearnConfig, TrainingReport, bootstrap, finite_difference_gradient,
                       gradient, initial_schedule, loss_and_outputs, rms_error, train,
                       write_report)
from .noise import NoiseConfig, rng_stream_for, total_noise
from .qcore import (DensityMatrix, HermitianOperator, PureState, expectation,
                    hermitian_eigen, outer_product, pauli_on, project_physical)
from .witness import (TrainingPair, WitnessObservable, concurrence_squared,
                      entanglement_of_formation, ghz_state, output_value, pair_state,
                      p_state_oracle, test_state_M, test_state_P, training_set)

__all__ = [
    "DEFAULT_FIT_ORDERS", "DEFAULT_N_STEPS", "DEFAULT_T_FINAL", "ConfigError",
    "DegenerateInputError", "DensityMatrix", "DivergenceError", "ExperimentConfig",
    "FourierFit", "HermitianOperator", "LearnConfig", "NoiseConfig",
    "ParameterSchedule", "PureState", "QnnsimError", "TimeGrid", "TrainingPair",
    "TrainingReport", "WitnessObservable", "__version__", "backend_name", "bootstrap",
    "build_hamiltonian", "coefficients_vs_noise", "concurrence_squared",
    "entanglement_of_formation", "expectation", "finite_difference_gradient",
    "fit_parameter_series", "fourier_fit", "ghz_state", "gradient", "hermitian_eigen",
    "initial_schedule", "load_config", "loss_and_outputs", "main", "noise_for_channel",
    "outer_product", "output_value", "p_state_oracle", "pair_state", "pauli_on",
    "project_physical", "propagate", "r2_vs_qubits", "r_squared", "read_schedule",
    "resolve_config",
    "rms_error", "rng_stream_for", "run", "step_unitary", "test_state_M",
    "test_state_P", "total_noise", "train", "training_set", "write_report",
    "write_schedule",
]
