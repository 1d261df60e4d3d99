"""poseforge: training-free 2D pose retargeting and alignment preparation.

Retargets a template pose sequence onto a reference character's skeletal
proportions while preserving the template's motion, renders skeleton frames,
and measures alignment quality for downstream pose-guided video generators.
"""

__version__ = "0.1.0"

from .errors import (
    ContractError,
    EmptyPoseError,
    EmptySequenceError,
    GeneratorError,
    MissingJointError,
    ParseError,
    PoseForgeError,
    UnusableReferenceError,
    ValidationError,
)
from .model import (
    BODY_18_TOPOLOGY,
    BODY_18_NAMES,
    DEFAULT_SCORE_THRESHOLD,
    Keypoint2D,
    LimbTopology,
    Pose,
    PoseSequence,
    check_canvas_bounds,
    denormalize,
)
from .io import (
    parse_openpose_frame,
    parse_sequence,
    serialize_sequence,
    write_sequence,
)
from .retarget import (
    EdgeRatios,
    LimbGeom,
    RetargetConfig,
    compute_edge_ratios,
    limb_geom,
    resolve_epsilon,
    retarget_frame,
    retarget_sequence,
)
from .render import RenderStyle, default_palette, render_pose, render_sequence
from .metrics import AlignmentReport, evaluate, report_from_json, report_to_json
from .kickstart import (
    GeneratorAdapter,
    IdentityGenerator,
    KickstartBundle,
    load_bundle,
    prepare_kickstart,
    run_generator,
)
from .synth import REFERENCE_PRESETS, make_reference, make_sequence

__all__ = [name for name in dir() if not name.startswith("_")]
