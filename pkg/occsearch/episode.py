"""
One object search episode: observe, perceive, remember, plan and act until
the target is picked, knocked off the table or the move limit is reached
"""
from datetime import timedelta
import logging
import time

from Crypto.Hash import SHA256
import isodate
import numpy as np

from . import etree, NSMAP, qname, TAU_TARGET, NO_LABEL
from .actions import ActionInstance, PICK
from .base import XMLComparableBase, XMLListBase
from .completion import COMPLETERS, CompletionInput, complete, get_completer
from .dynamics import GripperModel, apply_action, sweep_contacts
from .exceptions import CompletionError, InfeasibleActionError, \
    NoFeasibleActionError
from .memory import MemoryConfig, fuse_belief, transformed_mask
from .planner import PlannerConfig, PlanningState, gen_motion
from .scene import Scene
from .sensing import SegmentationNoise, TargetClassifier, render_observation, \
    segment, detect_target, build_occupancy, segment_lookup
from .voxelcore import BinaryVoxelGrid, OBSERVED_FREE, OBSERVED_OCCUPIED

logger = logging.getLogger(__name__)

SUCCESS = "success"
EJECTED = "ejected"
MOVE_LIMIT = "move-limit"
STATUSES = (SUCCESS, EJECTED, MOVE_LIMIT)
STAGES = ("preprocessing", "segmentation", "completion", "memory", "selection",
          "execution")
COMPLETION_OFF = "off"
TARGET_COLOR = (1.0, 0.85, 0.0)


def _floats(text):
    return [float(v) for v in text.split()]


def _format(values):
    return " ".join(repr(float(v)) for v in values)


class PerceptionConfig(XMLComparableBase):
    """
    Perception element
    Has optional attributes:
        completion: off, null, prism_hull, camera_extrude or external
        depthBudget: camera_extrude voxel budget
        exchange: external completer exchange directory
        command: external completer command, whitespace separated
        targetColor: reference RGB of the target
        tauTarget: color distance threshold
        pMerge: chance two visibly touching objects are seen as one
        margin: occupancy confidence margin around tau_occupancy
    """

    def __init__(self, completion=COMPLETION_OFF, target_color=TARGET_COLOR,
                 tau_target=TAU_TARGET, p_merge=0.0, margin=0.05, depth_budget=16,
                 exchange="completion_exchange", command=None):
        if completion != COMPLETION_OFF and completion not in COMPLETERS:
            raise ValueError("completion should be off or one of {}".format(
                ", ".join(sorted(COMPLETERS))))
        self.completion = completion
        self.classifier = TargetClassifier(target_color, tau_target)
        self.noise = SegmentationNoise(p_merge)
        if not 0.0 <= margin < 0.5:
            raise ValueError("margin should be in [0, 0.5)")
        self.margin = float(margin)
        self.depth_budget = int(depth_budget)
        self.exchange = exchange
        self.command = tuple(command) if command else None

    @property
    def completion_enabled(self):
        return self.completion != COMPLETION_OFF

    def completer(self):
        if self.completion == "camera_extrude":
            return get_completer(self.completion, depth_budget=self.depth_budget, floor=1)
        if self.completion == "external":
            return get_completer(self.completion, directory=self.exchange,
                                 command=self.command)
        return get_completer(self.completion)

    def element(self):
        el = etree.Element(qname("Perception"), nsmap=NSMAP)
        el.set("completion", self.completion)
        el.set("depthBudget", str(self.depth_budget))
        el.set("exchange", self.exchange)
        if self.command:
            el.set("command", " ".join(self.command))
        el.set("targetColor", _format(self.classifier.reference))
        el.set("tauTarget", repr(self.classifier.tau_target))
        el.set("pMerge", repr(self.noise.p_merge))
        el.set("margin", repr(self.margin))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        command = xml.get("command")
        return PerceptionConfig(
            xml.get("completion", COMPLETION_OFF),
            _floats(xml.get("targetColor")) if xml.get("targetColor") else TARGET_COLOR,
            float(xml.get("tauTarget", TAU_TARGET)),
            float(xml.get("pMerge", 0.0)),
            float(xml.get("margin", 0.05)),
            int(xml.get("depthBudget", 16)),
            xml.get("exchange", "completion_exchange"),
            command.split() if command else None)


class EpisodeConfig(XMLComparableBase):
    """
    Configuration element, one named bundle of feature flags and parameters
    Has required attribute:
        name
    Has optional attributes:
        retries: gen_motion attempts per decision before the step stalls
        moveFactor: move limit per object
    And child elements:
        Planner, Memory, Gripper, Perception
    """

    def __init__(self, name="baseline", planner=None, memory=None, gripper=None,
                 perception=None, retries=3, move_factor=3):
        if not isinstance(name, str) or not name:
            raise TypeError("name should be a nonempty string")
        self.name = name
        self.planner = planner if planner is not None else PlannerConfig()
        self.memory = memory if memory is not None else MemoryConfig.off()
        self.gripper = gripper if gripper is not None else GripperModel()
        self.perception = perception if perception is not None else PerceptionConfig()
        if retries < 1 or move_factor < 1:
            raise ValueError("retries and move_factor should be at least 1")
        self.retries = int(retries)
        self.move_factor = int(move_factor)

    def element(self):
        el = etree.Element(qname("Configuration"), nsmap=NSMAP)
        el.set("name", self.name)
        el.set("retries", str(self.retries))
        el.set("moveFactor", str(self.move_factor))
        el.append(self.planner.element())
        el.append(self.memory.element())
        el.append(self.gripper.element())
        el.append(self.perception.element())
        return el

    @staticmethod
    def parse(xml):
        """
        Parse XML and return EpisodeConfig
        """
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        parts = {}
        for element in xml.getchildren():
            tag = etree.QName(element.tag).localname
            if tag == "Planner":
                parts["planner"] = PlannerConfig.parse(element)
            elif tag == "Memory":
                parts["memory"] = MemoryConfig.parse(element)
            elif tag == "Gripper":
                parts["gripper"] = GripperModel.parse(element)
            elif tag == "Perception":
                parts["perception"] = PerceptionConfig.parse(element)
        return EpisodeConfig(xml.get("name"), retries=int(xml.get("retries", 3)),
                             move_factor=int(xml.get("moveFactor", 3)), **parts)


class EpisodeStep(XMLComparableBase):
    """
    Step element, one decision and what came of it
    Has required attributes:
        index, digest (SHA256 of the observation's depth and labels)
    Has optional attributes:
        reward, information, dispersion, direction, collision: scores of
            the chosen candidate, absent for a target pick
        contacts, ejected, displaced: outcome of the execution
        candidates, feasible: sample counts of the decision
    And child elements:
        Action (absent when the decision stalled), Timing
    """

    def __init__(self, index, digest, action=None, components=None, reward=None,
                 contacts=0, ejected=(), displaced=(), candidates=0, feasible=0,
                 timings=None):
        self.index = int(index)
        self.digest = digest
        self.action = action
        self.components = None if components is None else tuple(float(c) for c in components)
        self.reward = None if reward is None else float(reward)
        self.contacts = int(contacts)
        self.ejected = tuple(ejected)
        self.displaced = tuple(displaced)
        self.candidates = int(candidates)
        self.feasible = int(feasible)
        self.timings = dict(timings or {})

    @property
    def stalled(self):
        return self.action is None

    def element(self):
        el = etree.Element(qname("Step"), nsmap=NSMAP)
        el.set("index", str(self.index))
        el.set("digest", self.digest)
        if self.reward is not None:
            el.set("reward", repr(self.reward))
        if self.components is not None:
            for name, value in zip(("information", "dispersion", "direction",
                                    "collision"), self.components):
                el.set(name, repr(value))
        el.set("contacts", str(self.contacts))
        if self.ejected:
            el.set("ejected", " ".join(self.ejected))
        if self.displaced:
            el.set("displaced", " ".join(self.displaced))
        el.set("candidates", str(self.candidates))
        el.set("feasible", str(self.feasible))
        if self.action is not None:
            el.append(self.action.element())
        timing = etree.SubElement(el, qname("Timing"))
        for stage in STAGES:
            if stage in self.timings:
                timing.set(stage, isodate.duration_isoformat(
                    timedelta(seconds=self.timings[stage])))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        action = xml.find(qname("Action"))
        timing = xml.find(qname("Timing"))
        timings = {}
        if timing is not None:
            for stage, value in timing.attrib.items():
                timings[stage] = isodate.parse_duration(value).total_seconds()
        components = None
        if xml.get("information") is not None:
            components = [float(xml.get(n)) for n in
                          ("information", "dispersion", "direction", "collision")]
        return EpisodeStep(
            int(xml.get("index")), xml.get("digest"),
            ActionInstance.parse(action) if action is not None else None,
            components,
            float(xml.get("reward")) if xml.get("reward") is not None else None,
            int(xml.get("contacts", 0)),
            xml.get("ejected", "").split(), xml.get("displaced", "").split(),
            int(xml.get("candidates", 0)), int(xml.get("feasible", 0)), timings)


class StepList(XMLListBase):
    """List of EpisodeSteps"""

    def check(self, value):
        if not isinstance(value, EpisodeStep):
            raise TypeError("{} is not an EpisodeStep".format(value))

    def element(self):
        el = etree.Element(qname("StepList"), nsmap=NSMAP)
        for step in self:
            el.append(step.element())
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        return StepList([EpisodeStep.parse(s) for s in xml.iterchildren(qname("Step"))])


class EpisodeTrace(XMLComparableBase):
    """
    EpisodeTrace element
    Has required attributes:
        seed, status, moves
    Has optional attributes:
        firstObject: id of the first object acted on
        duration: wall clock of the whole episode, ISO 8601
    And child elements:
        Scene, Configuration, StepList
    """

    def __init__(self, scene, config, seed, status, steps=None, duration=None):
        if status not in STATUSES:
            raise ValueError("status should be one of {}".format(", ".join(STATUSES)))
        self.scene = scene
        self.config = config
        self.seed = int(seed)
        self.status = status
        self.steps = steps if isinstance(steps, StepList) else StepList(list(steps or []))
        self.duration = duration

    @property
    def moves(self):
        return len(self.steps)

    @property
    def first_object(self):
        for step in self.steps:
            if step.action is not None:
                return step.action.object_id
        return None

    def stage_totals(self):
        totals = {stage: 0.0 for stage in STAGES}
        for step in self.steps:
            for stage, seconds in step.timings.items():
                totals[stage] += seconds
        return totals

    def element(self):
        el = etree.Element(qname("EpisodeTrace"), nsmap=NSMAP)
        el.set("seed", str(self.seed))
        el.set("status", self.status)
        el.set("moves", str(self.moves))
        if self.first_object is not None:
            el.set("firstObject", self.first_object)
        if self.duration is not None:
            el.set("duration", isodate.duration_isoformat(timedelta(seconds=self.duration)))
        el.append(self.scene.element())
        el.append(self.config.element())
        el.append(self.steps.element())
        return el

    @staticmethod
    def parse(xml, directory="."):
        """
        Parse XML and return EpisodeTrace
        """
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        scene = Scene.parse(xml.find(qname("Scene")), directory)
        config = EpisodeConfig.parse(xml.find(qname("Configuration")))
        steps = StepList.parse(xml.find(qname("StepList")))
        duration = xml.get("duration")
        return EpisodeTrace(scene, config, int(xml.get("seed")), xml.get("status"), steps,
                            isodate.parse_duration(duration).total_seconds()
                            if duration else None)


class _Stopwatch:
    def __init__(self):
        self.timings = {}
        self._last = time.perf_counter()

    def lap(self, stage):
        now = time.perf_counter()
        self.timings[stage] = self.timings.get(stage, 0.0) + now - self._last
        self._last = now


def observation_digest(obs):
    return SHA256.new(obs.digest_bytes()).hexdigest()


def _target_label(target_mask, segments):
    """Segment holding most target pixels, None when the target is out of sight"""
    best = None
    for seg in segments:
        count = int(np.count_nonzero(seg.mask & target_mask))
        if count and (best is None or count > best[0]):
            best = (count, seg.label)
    return None if best is None else best[1]


def _complete_segments(completer, fresh, lookup, segments, camera):
    """Completed volume of every segment, labelled in the lookup"""
    claims = np.zeros(fresh.dims, dtype=bool)
    free = BinaryVoxelGrid.from_mask(fresh, fresh.observed == OBSERVED_FREE)
    seen = fresh.observed == OBSERVED_OCCUPIED
    for seg in segments:
        partial = BinaryVoxelGrid.from_mask(fresh, seen & (lookup == seg.label))
        if partial.is_empty():
            continue
        try:
            result = complete(completer, CompletionInput(partial, free, camera.position))
        except CompletionError as e:
            logger.warning("completion of segment %d failed: %s", seg.label, e)
            continue
        added = result.completed.data & fresh.unobserved() & (lookup == NO_LABEL)
        lookup[added] = seg.label
        claims |= result.completed.data
    return claims


def run_episode(scene, config, seed=None):
    """
    Search for the target until it is picked (success), it leaves the table
    (ejected) or move_factor moves per object have been made (move-limit)
    """
    seed = config.planner.seed if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    noise_rng = np.random.default_rng([seed, 1])
    perception = config.perception
    memory = config.memory
    completer = perception.completer() if perception.completion_enabled else None
    limit = config.move_factor * len(scene.objects)
    started = time.perf_counter()

    steps = []
    status = MOVE_LIMIT
    current = scene
    prior = None
    prior_lookup = None
    moved = []
    while len(steps) < limit:
        watch = _Stopwatch()
        geometry = current.field_geometry
        obs = render_observation(current)
        fresh = build_occupancy(obs, geometry, memory.tau_occupancy, perception.margin)
        digest = observation_digest(obs)
        watch.lap("preprocessing")

        segments = segment(obs, perception.noise, noise_rng)
        lookup = segment_lookup(obs, segments, geometry)
        target_label = _target_label(detect_target(obs, perception.classifier), segments)
        watch.lap("segmentation")

        claims = None
        if completer is not None:
            claims = _complete_segments(completer, fresh, lookup, segments, current.camera)
        watch.lap("completion")

        belief = fuse_belief(fresh, memory, prior, claims, [(g, t) for g, t, _ in moved])
        if memory.enabled and prior is not None:
            unlabelled = fresh.unobserved() & (lookup == NO_LABEL) & belief.known_occupied()
            if memory.positive_enabled:
                for grid, transform, label in moved:
                    carried = transformed_mask(grid, transform) & unlabelled
                    lookup[carried] = label
                    unlabelled &= ~carried
            moved_labels = [label for _, _, label in moved]
            kept = unlabelled & ~np.isin(prior_lookup, moved_labels)
            lookup[kept] = prior_lookup[kept]
        watch.lap("memory")

        state = PlanningState(belief, current.camera, lookup, current.table,
                              target_label, config.gripper)
        action = state.assess_target(config.planner)
        components = reward = None
        record = []
        if action is None:
            for attempt in range(config.retries):
                try:
                    best = gen_motion(state, config.planner, rng, record)
                except NoFeasibleActionError as e:
                    logger.debug("decision %d attempt %d: %s", len(steps), attempt, e)
                    continue
                action, components, reward = best.action, best.components, best.reward
                break
        watch.lap("selection")
        feasible = sum(1 for c in record if c.feasible)

        if action is None:
            logger.info("step %d stalled", len(steps))
            moved = []
            prior, prior_lookup = belief, lookup
            steps.append(EpisodeStep(len(steps), digest, None, candidates=len(record),
                                     feasible=feasible, timings=watch.timings))
            continue

        selected = current.by_label(action.label)
        action.object_id = selected.id if selected is not None else None
        if action.kind == PICK and selected is not None and selected.is_target and \
                action is state.target_action:
            contacts = sweep_contacts(current, action, config.gripper)
            watch.lap("execution")
            steps.append(EpisodeStep(len(steps), digest, action, contacts=contacts,
                                     candidates=len(record), feasible=feasible,
                                     timings=watch.timings))
            status = SUCCESS
            break

        try:
            outcome = apply_action(current, action, config.gripper)
        except InfeasibleActionError as e:
            logger.info("step %d could not be executed: %s", len(steps), e)
            watch.lap("execution")
            moved = []
            prior, prior_lookup = belief, lookup
            steps.append(EpisodeStep(len(steps), digest, action, components, reward,
                                     candidates=len(record), feasible=feasible,
                                     timings=watch.timings))
            continue
        current = current.with_outcome(outcome)
        watch.lap("execution")
        steps.append(EpisodeStep(len(steps), digest, action, components, reward,
                                 outcome.contacts, outcome.ejected, outcome.displaced,
                                 len(record), feasible, watch.timings))

        if scene.target_id is not None and scene.target_id in outcome.ejected:
            status = EJECTED
            break
        object_grid = BinaryVoxelGrid.from_mask(
            belief, belief.known_occupied() & (lookup == action.label))
        moved = [(object_grid, action.motion(), action.label)]
        prior, prior_lookup = belief, lookup

    duration = time.perf_counter() - started
    logger.info("episode seed %d ended %s after %d moves", seed, status, len(steps))
    return EpisodeTrace(scene, config, seed, status, steps, duration)


def replay_trace(trace):
    """
    Run the recorded episode again and list every step where the decision
    or the observation differs; an empty list means it replayed exactly
    """
    again = run_episode(trace.scene, trace.config, trace.seed)
    differences = []
    if again.status != trace.status:
        differences.append("status {} != {}".format(trace.status, again.status))
    for index in range(max(len(trace.steps), len(again.steps))):
        if index >= len(trace.steps) or index >= len(again.steps):
            differences.append("step {} missing from {}".format(
                index, "recording" if index >= len(trace.steps) else "replay"))
            continue
        old, new = trace.steps[index], again.steps[index]
        if old.digest != new.digest:
            differences.append("step {} observation differs".format(index))
        if (old.action is None) != (new.action is None) or (
                old.action is not None and not old.action.same_decision(new.action)):
            differences.append("step {} action differs".format(index))
    return differences
