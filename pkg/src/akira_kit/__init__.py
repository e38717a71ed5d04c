"""Extended camera model toolkit.

Pinhole + radial distortion + aperture camera model, packed per-pixel
camera maps, randomized optical augmentation for video clips, flow-based
fidelity metrics (FlowSim / ZoomSim / DistortSim), scale-corrected
trajectory errors (APE / RPE), and a synthetic oracle scene generator.
"""

from .backend import DEFAULT_BACKEND, HAVE_NUMBA, resolve_backend, set_num_threads
from .bokeh import (
    DEFAULT_CAP,
    DEFAULT_GAIN,
    blur_radius_map,
    bokeh_render,
    disc_blur,
)
from .camera import (
    ALPHA_RANGE,
    DISTORTION_RANGE,
    ApertureSpec,
    CameraIntrinsics,
    CameraMap,
    CameraParams,
    CameraPose,
    Distortion,
    aperture_exponent,
    aperture_map_value,
    build_camera_map,
    distort_pixel,
    plucker_ray,
    project,
    radial_factor,
    undistort_pixel,
)
from .errors import (
    AkiraError,
    BehindCameraError,
    ConfigError,
    FormatError,
    InversionError,
    NumericError,
    UnsupportedDistortionError,
)
from .flow import (
    DEFAULT_THRESHOLD,
    FlowSimResult,
    distortsim,
    flow_from_warp,
    flowsim,
    focus_area,
    theoretical_distortion_flow,
    theoretical_zoom_flow,
    zoomsim,
)
from .formats import (
    read_camera_maps,
    read_flo,
    read_params_jsonl,
    read_pfm,
    read_png,
    write_camera_maps,
    write_flo,
    write_params_jsonl,
    write_pfm,
    write_png,
)
from .pipeline import AugmentResult, Frame, augment_clip, identity_params
from .sampling import (
    AugmentConfig,
    EffectFlags,
    OpticalTrajectory,
    apply_dropout,
    sample_optical_trajectory,
    sample_spline_trajectory,
    spline_sequence,
    substream,
)
from .synth import (
    EffectCurve,
    PlaneSpec,
    SceneBundle,
    SceneSpec,
    dolly_zoom_bundle,
    load_clip,
    render_scene,
    write_bundle,
)
from .trajectory import (
    PoseTrajectory,
    TrajErrorResult,
    align_and_evaluate,
    ape,
    quat_to_rot,
    read_tum,
    rot_to_quat,
    rotation_angle,
    rpe,
    scale_correct,
    write_tum,
)
from .warping import (
    WarpField,
    bilinear_sample,
    distortion_crop_factor,
    distortion_positions,
    distortion_warp,
    zoom_positions,
    zoom_warp,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_RANGE",
    "DEFAULT_BACKEND",
    "DEFAULT_CAP",
    "DEFAULT_GAIN",
    "DEFAULT_THRESHOLD",
    "DISTORTION_RANGE",
    "HAVE_NUMBA",
    "AkiraError",
    "ApertureSpec",
    "AugmentConfig",
    "AugmentResult",
    "BehindCameraError",
    "CameraIntrinsics",
    "CameraMap",
    "CameraParams",
    "CameraPose",
    "ConfigError",
    "Distortion",
    "EffectCurve",
    "EffectFlags",
    "FlowSimResult",
    "FormatError",
    "Frame",
    "InversionError",
    "NumericError",
    "OpticalTrajectory",
    "PlaneSpec",
    "PoseTrajectory",
    "SceneBundle",
    "SceneSpec",
    "TrajErrorResult",
    "UnsupportedDistortionError",
    "WarpField",
    "align_and_evaluate",
    "ape",
    "aperture_exponent",
    "aperture_map_value",
    "apply_dropout",
    "augment_clip",
    "bilinear_sample",
    "blur_radius_map",
    "bokeh_render",
    "build_camera_map",
    "disc_blur",
    "distort_pixel",
    "distortion_crop_factor",
    "distortion_positions",
    "distortion_warp",
    "distortsim",
    "dolly_zoom_bundle",
    "flow_from_warp",
    "flowsim",
    "focus_area",
    "identity_params",
    "load_clip",
    "plucker_ray",
    "project",
    "quat_to_rot",
    "radial_factor",
    "read_camera_maps",
    "read_flo",
    "read_params_jsonl",
    "read_pfm",
    "read_png",
    "read_tum",
    "render_scene",
    "resolve_backend",
    "rot_to_quat",
    "rotation_angle",
    "rpe",
    "sample_optical_trajectory",
    "sample_spline_trajectory",
    "scale_correct",
    "set_num_threads",
    "spline_sequence",
    "substream",
    "theoretical_distortion_flow",
    "theoretical_zoom_flow",
    "undistort_pixel",
    "write_bundle",
    "write_camera_maps",
    "write_flo",
    "write_params_jsonl",
    "write_pfm",
    "write_png",
    "write_tum",
    "zoom_positions",
    "zoom_warp",
    "zoomsim",
]
