"""MIMO channel synthesis and episodic dataset tools for ray-traced scenes.

The package turns per-path ray descriptions into MIMO channel matrices
(planar-wave geometric model, its OFDM extension, or an element-wise
spherical-wave model), samples random-parameter scenes, stores episodic
datasets with paired context features, and scores beam selection (top-K
accuracy) and 1-bit channel estimation (NMSE).
"""

__version__ = "0.1.0"

from .errors import CaviarError  # noqa: E402
from .core import (  # noqa: E402
    ArrayConfig, Episode, Pose, RayPath, Scene, SummaryRecord, Violation,
    dataset_summary, validate_episode, validate_scene,
)
from .arrays import apply_pose, correct_orientation, steering_vector  # noqa: E402
from .synthesis import (  # noqa: E402
    ChannelSet, geometric_channel, ofdm_channel, spherical_channel, synthesize,
)
from .rdmgeo import RdmGeoSpec, sample_rdm_batch, sample_rdm_scene  # noqa: E402
from .beamspace import (  # noqa: E402
    BeamLabel, Codebook, TopKReport, best_beam_pair, dft_codebook,
    nearest_position_predictor, top_k_accuracy,
)
from .estimation import PilotPlan, baseline_estimate, nmse, one_bit_measure  # noqa: E402
from .dataset_io import (  # noqa: E402
    DatasetManifest, export_channel_tensor, read_channel_tensor, read_dataset, write_dataset,
)
