"""Low-frequency sound field toolkit for rectangular rooms.

Simulates modal sound fields, reconstructs full-room fields from sparse
microphone observations, evaluates reconstructions, and designs acoustic
contrast sound-zone filters from reconstructed room transfer functions.
"""

from .core import (FieldTensor, FrequencySet, GridSpec, Room, SamplingMask,
                   build_frequency_set, build_grids, concat_split, draw_mask,
                   split_concat)
from .metrics import (NmseCurve, db, mnmse, nmse_per_frequency,
                      write_mnmse_csv, write_nmse_csv)
from .modal import (LISTENING_ROOM, Mode, ModeSet, RoomSamplerConfig,
                    enumerate_modes, generate_dataset, greens_function,
                    mode_shape, render_impulse_responses, sample_room,
                    simulate_field, time_constants)
from .sparse import (PlaneWaveDictionary, SparseSolution, build_dictionary,
                     extrapolate, reconstruct_tensor, select_lambda,
                     solve_weighted_lasso)
from .sparse import solve_weighted_lasso_multi
from .tensorio import (ImpulseResponseRecord, MeasurementError,
                       MeasurementManifest, TensorFormatError,
                       assemble_field_tensor, import_measurements, ir_to_rtf,
                       read_mask, read_tensor, write_mask, write_tensor)
from .zones import (ZoneExperimentResult, ZoneRtfs, acoustic_contrast,
                    default_loudspeaker_layout, default_zone_indices,
                    optimal_weights, regularization, write_contrast_csv,
                    zone_experiment)

__version__ = "0.1.0"
