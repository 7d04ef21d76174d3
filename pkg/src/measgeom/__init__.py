"""Render a turntable object, embed the images with diffusion maps and
measure how the embedding's density departs from the true angle density."""

from .analysis import (AgreementReport, AlignmentReport, ModeReport, TopologyReport,
                       UniformityReport, broadside_angles, check_topology,
                       compare_density_Y_vs_Z, detect_modes, procrustes_align,
                       uniformity_report)
from .config import ExperimentConfig, load_config, parse_config
from .density import DensityProfile, LocalDensity, calibrate_radius, density_ratio, local_density
from .diffusion import (DiffusionMap, Embedding, build_kernel, diffusion_distance, diffusion_map,
                        pairwise_distances, select_sigma, spectral_embed)
from .exceptions import (ConvergenceError, DatasetFormatError, InvalidArgumentError,
                         MeasGeomError, MeshParseError, NumericalDegeneracyError,
                         ProvenanceError, UnsupportedStructureError)
from .formats import load_dataset, load_density, load_embedding, save_dataset
from .render import Dataset, TurntableRenderer, render_dataset, render_view
from .scene import (AngleSample, CameraConfig, TriMesh, builtin_mesh, load_mesh, sample_angles,
                    side_camera, top_camera, torus_distance)

__version__ = "0.1.0"

__all__ = [
    "AgreementReport", "AlignmentReport", "AngleSample", "CameraConfig", "ConvergenceError",
    "Dataset", "DatasetFormatError", "DensityProfile", "DiffusionMap", "Embedding",
    "ExperimentConfig", "InvalidArgumentError", "LocalDensity", "MeasGeomError",
    "MeshParseError", "ModeReport", "NumericalDegeneracyError", "ProvenanceError",
    "TopologyReport", "TriMesh", "TurntableRenderer", "UniformityReport",
    "UnsupportedStructureError", "broadside_angles", "build_kernel", "builtin_mesh",
    "calibrate_radius", "check_topology", "compare_density_Y_vs_Z", "density_ratio",
    "detect_modes", "diffusion_distance", "diffusion_map", "load_config", "load_dataset",
    "load_density", "load_embedding", "load_mesh", "local_density", "pairwise_distances",
    "parse_config", "procrustes_align", "render_dataset", "render_view", "sample_angles",
    "save_dataset", "select_sigma", "side_camera", "spectral_embed", "top_camera",
    "torus_distance", "uniformity_report",
]
