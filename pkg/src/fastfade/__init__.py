"""Low-complexity frequency-domain MMSE equalization over fast fading channels.

A library and CLI simulator for OTFS, OFDM and SC-FDE transmission over
doubly-selective (fast fading) channels: sparse delay-Doppler channel
models, circular stripe-diagonal frequency-Doppler channel matrices, a
banded Gaussian-elimination solver, time- and frequency-domain MMSE
equalizers with an operation-count audit, spectral output-SNR analysis,
and a seeded Monte-Carlo BER harness.
"""

from .analysis import (ErgodicBer, SnrGrid, SpectralSummary, ergodic_ber,
                       output_snr_direct, output_snr_eigen, q_function,
                       scheme_snr_grid, theoretical_ber)
from .channel import (BandedHnu, ChannelPath, CpTooShortError,
                      DelayTimeChannel, FrameGrid, FreqDopplerChannel,
                      OffGridDelayError, PathSet, TdlProfile, apply_delay_time,
                      build_Hnu, build_Ht, build_short_frame,
                      delay_time_samples, freq_doppler_samples, list_profiles,
                      load_profile, perturb_channel, propagate_waveform,
                      short_frame_hnu_window, tdl_realization, tf_transfer)
from .equalizer import (ChannelOperators, EqualizationResult, EqualizerConfig,
                        build_channel_operators, equalize_frame, mmse_freq,
                        mmse_time, one_tap_fde)
from .harness import (BerReport, ExperimentConfig, ValidationReport,
                      derive_grid, run_ber_sweep, run_validation)
from .linalg import (CircularBandedMatrix, NotHermitianError, OpCounter,
                     OutOfStripeError, SingularMatrixError, UnitaryOperator,
                     band_adjoint_apply, band_apply, band_from_dense,
                     band_gram, band_solve, complexity_estimate,
                     dense_solve_ops, eig_hermitian)
from .modem import (DataGrid, ModulatedSignal, Scheme, demodulate, modulate,
                    modulation_operator, qam_demap, qam_map)

__version__ = "0.1.0"
