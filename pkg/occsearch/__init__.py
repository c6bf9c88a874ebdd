"""
Object search in simulated tabletop clutter: occupancy carving, shadow
raycasting, constrained shape completion, volumetric memory and greedy
action selection, plus the experiment harness around them
"""
from importlib import resources

from lxml import etree


NS = "urn:occsearch:1"
NSMAP = {None: NS}

with resources.files("occsearch").joinpath("schema/occsearch.xsd").open("rb") as f:
    SCHEMA = etree.XMLSchema(etree.parse(f))

# thresholds and weights used when a configuration leaves them out
TAU_OCCUPANCY = 0.5
TAU_TARGET = 0.5
TAU_GREEDY = 0.9
DEFAULT_WEIGHTS = (1.0 / 2000.0, 1.0, 3.0, -5.0)
DEFAULT_ALPHA = 0.9

# segment labels: -1 nothing, 0 table, objects from 1
NO_LABEL = -1
TABLE_LABEL = 0
UNLABELED = 63


def qname(tag):
    """Namespaced tag name"""
    return "{{{}}}{}".format(NS, tag)


def as_element(xml):
    """Accept str, bytes or an element and return an element"""
    if isinstance(xml, (str, bytes)):
        xml = etree.fromstring(xml)
    if not isinstance(xml, etree._Element):
        raise TypeError("not valid xml")
    return xml


def parse(xml):
    """
    Parse function, does an initial read to figure out the root element then
    attempts to call the relevant parser
    """
    xml = as_element(xml)
    tag = etree.QName(xml).localname
    parser = ROOT_PARSERS.get(tag)
    if parser is None:
        raise ValueError("no parser for root element {}".format(tag))
    return parser(xml)


def validate(xml):
    """
    Validate a scene, experiment or trace document against the schema

    Returns a tuple of valid true/false and if false the error(s)
    """
    xml = as_element(xml)
    try:
        SCHEMA.assertValid(xml)
    except etree.DocumentInvalid as e:
        return (False, e)
    return (True, "")


from .exceptions import EmptyInputError, GeometryMismatchError, \
    NoSelectableObjectError, NoFeasibleActionError, InfeasibleActionError, \
    CompletionError, SceneFileError
from .voxelcore import GridGeometry, BinaryVoxelGrid, OccupancyField, \
    sparse_points, chamfer_distance, grid_distance, union, intersection, \
    difference, is_subset, UNOBSERVED, OBSERVED_FREE, OBSERVED_OCCUPIED
from .gridfile import build_grid, parse_grid, dump_grid, load_grid
from .geometry import Transform
from .camera import Camera
from .scene import Table, ObjectModel, ObjectList, Scene, load_scene, \
    save_scene
from .completion import CompletionInput, CompletionResult, Completer, \
    complete, enforce_constraints, get_completer, voxelize_primitive, \
    DatasetTriple, synthesize_dataset, evaluate_completer
from .sensing import Observation, Segment, SegmentationNoise, \
    TargetClassifier, render_observation, segment, detect_target, \
    build_occupancy, segment_lookup
from .occlusion import ShadowSet, raycast, compute_occlusions, select_object
from .memory import MemoryConfig, apply_positive_memory, \
    apply_negative_memory, decay_unobserved, fuse_belief
from .dynamics import GripperModel, Body, ActionOutcome, apply_action, \
    sweep_contacts
from .planner import ActionInstance, Grasp, RewardWeights, PlannerConfig, \
    PlanningState, feasible, info_gain, dispersion, direction, collision, \
    reward, gen_motion, target_blocking_rule
from .episode import PerceptionConfig, EpisodeConfig, EpisodeStep, \
    EpisodeTrace, run_episode, replay_trace
from .harness import ExperimentSpec, ResultTable, run_experiment, \
    scenario_library, timing_report

ROOT_PARSERS = {
    "Scene": Scene.parse,
    "Configuration": EpisodeConfig.parse,
    "EpisodeTrace": EpisodeTrace.parse,
    "Experiment": ExperimentSpec.parse,
}
