"""
Experiment files, the trial matrix and its result tables
"""
from collections import OrderedDict, namedtuple
from concurrent.futures import ProcessPoolExecutor
import csv
import itertools
import logging
import os

from Crypto.Hash import SHA256
from tqdm import tqdm

from .. import etree, NSMAP, qname, validate
from ..base import XMLComparableBase, XMLListBase
from ..episode import EpisodeConfig, run_episode, SUCCESS, EJECTED, MOVE_LIMIT
from ..exceptions import SceneFileError
from ..memory import MemoryConfig
from ..scene import load_scene
from .scenarios import scenario_library
from .stats import mean_stderr, welch_t
from .timing import timing_report, write_timing_csv

logger = logging.getLogger(__name__)

ERROR = "error"
POOLED = "*"
WORKERS_VARIABLE = "OCCSEARCH_WORKERS"
TRIAL_COLUMNS = ("scene", "config", "trial", "seed", "status", "moves", "first_object")
SUMMARY_COLUMNS = ("scene", "config", "trials", "mean_moves", "stderr", "success_ratio",
                   "ejected", "move_limit", "errors")
SIGNIFICANCE_COLUMNS = ("scene", "config_a", "config_b", "n_a", "n_b", "mean_a", "mean_b",
                        "t", "df", "p")


class SceneRef(XMLComparableBase):
    """
    SceneFile or Scenario element, a scene file path or a built-in scene name
    """

    def __init__(self, path=None, scenario=None):
        if (path is None) == (scenario is None):
            raise ValueError("scene reference should name a path or a scenario")
        self.path = path
        self.scenario = scenario

    def resolve(self, directory=".", library=None):
        if self.scenario is not None:
            library = library if library is not None else scenario_library()
            if self.scenario not in library:
                raise SceneFileError("unknown scenario {}".format(self.scenario))
            return library[self.scenario]
        return load_scene(os.path.join(directory, self.path))

    def element(self):
        if self.scenario is not None:
            el = etree.Element(qname("Scenario"), nsmap=NSMAP)
            el.set("name", self.scenario)
        else:
            el = etree.Element(qname("SceneFile"), nsmap=NSMAP)
            el.set("path", self.path)
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        if etree.QName(xml).localname == "Scenario":
            return SceneRef(scenario=xml.get("name"))
        return SceneRef(path=xml.get("path"))


class SceneList(XMLListBase):
    """List of SceneRefs"""

    def check(self, value):
        if not isinstance(value, SceneRef):
            raise TypeError("{} is not a SceneRef".format(value))

    def element(self):
        el = etree.Element(qname("SceneList"), nsmap=NSMAP)
        for ref in self:
            el.append(ref.element())
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        return SceneList([SceneRef.parse(e) for e in xml.getchildren()
                          if isinstance(e.tag, str)])


class ConfigurationList(XMLListBase):
    """List of EpisodeConfigs"""

    def check(self, value):
        if not isinstance(value, EpisodeConfig):
            raise TypeError("{} is not an EpisodeConfig".format(value))

    def element(self):
        el = etree.Element(qname("ConfigurationList"), nsmap=NSMAP)
        for config in self:
            el.append(config.element())
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        return ConfigurationList([EpisodeConfig.parse(e) for e in
                                  xml.iterchildren(qname("Configuration"))])


class ExperimentSpec(XMLComparableBase):
    """
    Experiment element
    Has required attributes:
        name, trials, masterSeed
    And child elements:
        SceneList, ConfigurationList, Output (directory, traces)

    directory is where relative scene paths are looked up
    """

    def __init__(self, name, scenes, configurations, trials=1, master_seed=0,
                 output="results", traces=True, directory="."):
        if not isinstance(name, str) or not name:
            raise TypeError("name should be a nonempty string")
        if not isinstance(trials, int):
            raise TypeError("trials should be an integer")
        if trials < 1:
            raise ValueError("trials should be at least 1")
        self.name = name
        self.scenes = scenes if isinstance(scenes, SceneList) else SceneList(list(scenes))
        self.configurations = configurations if isinstance(
            configurations, ConfigurationList) else ConfigurationList(list(configurations))
        if len(self.scenes) == 0 or len(self.configurations) == 0:
            raise ValueError("experiment needs at least one scene and one configuration")
        names = [c.name for c in self.configurations]
        if len(set(names)) != len(names):
            raise ValueError("configuration names should be unique")
        self.trials = trials
        self.master_seed = int(master_seed)
        self.output = output
        self.traces = bool(traces)
        self.directory = directory

    def resolve_scenes(self):
        """Scenes by name in file order"""
        library = scenario_library()
        scenes = OrderedDict()
        for ref in self.scenes:
            scene = ref.resolve(self.directory, library)
            name = scene.name or os.path.splitext(os.path.basename(ref.path))[0]
            if name in scenes:
                raise SceneFileError("scene name {} used twice".format(name))
            scenes[name] = scene
        return scenes

    def element(self):
        el = etree.Element(qname("Experiment"), nsmap=NSMAP)
        el.set("name", self.name)
        el.set("trials", str(self.trials))
        el.set("masterSeed", str(self.master_seed))
        el.append(self.scenes.element())
        el.append(self.configurations.element())
        output = etree.SubElement(el, qname("Output"))
        output.set("directory", self.output)
        output.set("traces", "true" if self.traces else "false")
        return el

    @staticmethod
    def parse(xml, directory="."):
        """
        Parse XML and return ExperimentSpec
        """
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        scenes = SceneList.parse(xml.find(qname("SceneList")))
        configurations = ConfigurationList.parse(xml.find(qname("ConfigurationList")))
        output = xml.find(qname("Output"))
        out_directory, traces = "results", True
        if output is not None:
            out_directory = output.get("directory", out_directory)
            traces = output.get("traces", "true") in ("true", "1")
        return ExperimentSpec(xml.get("name"), scenes, configurations,
                              int(xml.get("trials", 1)), int(xml.get("masterSeed", 0)),
                              out_directory, traces, directory)


def load_experiment(path):
    """Read, validate and parse an experiment file, errors carry file and line"""
    try:
        tree = etree.parse(path)
    except etree.XMLSyntaxError as e:
        raise SceneFileError(e.msg, path, e.lineno)
    valid, error = validate(tree.getroot())
    if not valid:
        last = error.error_log.last_error
        raise SceneFileError(last.message, path, last.line)
    try:
        return ExperimentSpec.parse(tree.getroot(), os.path.dirname(os.path.abspath(path)))
    except (TypeError, ValueError) as e:
        if isinstance(e, SceneFileError):
            raise
        raise SceneFileError(str(e), path, tree.getroot().sourceline)


def trial_seed(master_seed, scene, config, trial):
    """
    First 8 bytes, little endian, of SHA256("master|scene|config|trial"),
    so adding a scene or configuration leaves every other cell's seed alone
    """
    key = "{}|{}|{}|{}".format(master_seed, scene, config, trial).encode("utf-8")
    return int.from_bytes(SHA256.new(key).digest()[:8], "little")


TrialResult = namedtuple("TrialResult", TRIAL_COLUMNS + ("timings",))


def trace_filename(scene, config, trial):
    return "{}__{}__{}.xml".format(scene, config, trial)


def run_trial(scene_name, scene, config, trial, seed, trace_directory=None):
    """One episode, failures come back as an error row instead of raising"""
    try:
        trace = run_episode(scene, config, seed)
    except Exception:
        logger.exception("trial %s/%s/%d (seed %d) failed", scene_name, config.name,
                         trial, seed)
        return TrialResult(scene_name, config.name, trial, seed, ERROR, None, None, {})
    if trace_directory is not None:
        path = os.path.join(trace_directory, trace_filename(scene_name, config.name, trial))
        with open(path, "wb") as f:
            f.write(trace.pretty_print())
    return TrialResult(scene_name, config.name, trial, seed, trace.status, trace.moves,
                       trace.first_object, trace.stage_totals())


def _run_trial_args(args):
    return run_trial(*args)


def worker_count(workers=None):
    """Explicit count, else OCCSEARCH_WORKERS, else 1"""
    if workers is None:
        workers = os.environ.get(WORKERS_VARIABLE, "1")
    try:
        workers = int(workers)
    except ValueError:
        raise ValueError("{} should be an integer".format(WORKERS_VARIABLE))
    if workers < 1:
        raise ValueError("worker count should be at least 1")
    return workers


class CellStats:
    """Aggregate of one (scene, configuration) cell"""

    def __init__(self, rows):
        self.trials = len(rows)
        moves = [r.moves for r in rows if r.status != ERROR]
        if moves:
            self.mean_moves, self.stderr = mean_stderr(moves)
        else:
            self.mean_moves = self.stderr = float("nan")
        self.success = sum(1 for r in rows if r.status == SUCCESS)
        self.ejected = sum(1 for r in rows if r.status == EJECTED)
        self.move_limit = sum(1 for r in rows if r.status == MOVE_LIMIT)
        self.errors = sum(1 for r in rows if r.status == ERROR)

    @property
    def success_ratio(self):
        return self.success / self.trials if self.trials else 0.0

    def __repr__(self):
        return "CellStats(trials={}, mean_moves={:.3f}, stderr={:.3f}, success_ratio={:.3f})".format(
            self.trials, self.mean_moves, self.stderr, self.success_ratio)


class ResultTable:
    """Per-trial rows, kept sorted by (scene, config, trial)"""

    def __init__(self, rows):
        self.rows = sorted(rows, key=lambda r: (r.scene, r.config, r.trial))

    @property
    def scenes(self):
        return list(OrderedDict.fromkeys(r.scene for r in self.rows))

    @property
    def configs(self):
        return list(OrderedDict.fromkeys(r.config for r in self.rows))

    def select(self, scene=POOLED, config=None):
        return [r for r in self.rows if (scene == POOLED or r.scene == scene)
                and (config is None or r.config == config)]

    def moves(self, scene, config):
        return [r.moves for r in self.select(scene, config) if r.status != ERROR]

    def cells(self):
        cells = OrderedDict()
        for (scene, config), rows in itertools.groupby(
                self.rows, key=lambda r: (r.scene, r.config)):
            cells[(scene, config)] = CellStats(list(rows))
        return cells

    def cell(self, scene, config):
        return CellStats(self.select(scene, config))

    def significance(self):
        """
        Welch one sided test that config_a needs fewer moves than config_b,
        for every ordered pair per scene and pooled over all scenes
        """
        rows = []
        for scene in self.scenes + [POOLED]:
            for a, b in itertools.permutations(self.configs, 2):
                moves_a = self.moves(scene, a)
                moves_b = self.moves(scene, b)
                t, df, p = welch_t(moves_a, moves_b)
                rows.append((scene, a, b, len(moves_a), len(moves_b),
                             _mean(moves_a), _mean(moves_b), t, df, p))
        return rows

    def write_trials_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TRIAL_COLUMNS)
            for r in self.rows:
                writer.writerow([r.scene, r.config, r.trial, r.seed, r.status,
                                 "" if r.moves is None else r.moves, r.first_object or ""])

    def write_summary_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(SUMMARY_COLUMNS)
            for (scene, config), c in self.cells().items():
                writer.writerow([scene, config, c.trials, _number(c.mean_moves),
                                 _number(c.stderr), _number(c.success_ratio), c.ejected,
                                 c.move_limit, c.errors])

    def write_significance_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(SIGNIFICANCE_COLUMNS)
            for row in self.significance():
                writer.writerow(list(row[:5]) + [_number(v) for v in row[5:]])


def _mean(values):
    return sum(values) / len(values) if values else float("nan")


def _number(value):
    return "{:.6g}".format(value)


def read_trials_csv(path):
    """ResultTable back from a per-trial CSV, without stage timings"""
    rows = []
    with open(path, newline="") as f:
        for record in csv.DictReader(f):
            rows.append(TrialResult(
                record["scene"], record["config"], int(record["trial"]), int(record["seed"]),
                record["status"], int(record["moves"]) if record["moves"] else None,
                record["first_object"] or None, {}))
    return ResultTable(rows)


def run_experiment(spec, workers=None, progress=True):
    """
    Run every (scene, configuration, trial) cell and write trials.csv,
    summary.csv, significance.csv and timing.csv (plus a trace per trial
    when traces are on) under the experiment's output directory
    """
    scenes = spec.resolve_scenes()
    workers = worker_count(workers)
    os.makedirs(spec.output, exist_ok=True)
    trace_directory = None
    if spec.traces:
        trace_directory = os.path.join(spec.output, "traces")
        os.makedirs(trace_directory, exist_ok=True)

    jobs = []
    for scene_name, scene in scenes.items():
        for config in spec.configurations:
            for trial in range(spec.trials):
                seed = trial_seed(spec.master_seed, scene_name, config.name, trial)
                jobs.append((scene_name, scene, config, trial, seed, trace_directory))
    logger.info("experiment %s: %d trials on %d workers", spec.name, len(jobs), workers)

    if workers == 1:
        rows = [_run_trial_args(job) for job in tqdm(jobs, disable=not progress)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(tqdm(pool.map(_run_trial_args, jobs), total=len(jobs),
                             disable=not progress))

    table = ResultTable(rows)
    table.write_trials_csv(os.path.join(spec.output, "trials.csv"))
    table.write_summary_csv(os.path.join(spec.output, "summary.csv"))
    table.write_significance_csv(os.path.join(spec.output, "significance.csv"))
    finished = [r.timings for r in table.rows if r.status != ERROR]
    write_timing_csv(timing_report(finished), os.path.join(spec.output, "timing.csv"),
                     len(finished))
    return table


def alpha_sweep(scene, config, alphas, trials, master_seed=0):
    """
    Mean moves and stderr of config with memory decay alpha set to each of
    alphas; seeds depend on the trial only, so every alpha sees the same
    episodes up to the memory
    """
    results = OrderedDict()
    base = config.memory
    for alpha in alphas:
        memory = MemoryConfig(alpha, base.tau_occupancy, base.positive_enabled,
                              base.negative_enabled)
        swept = EpisodeConfig("{}-alpha{}".format(config.name, alpha), config.planner,
                              memory, config.gripper, config.perception, config.retries,
                              config.move_factor)
        moves = []
        for trial in range(trials):
            seed = trial_seed(master_seed, scene.name, config.name, trial)
            moves.append(run_episode(scene, swept, seed).moves)
        results[alpha] = mean_stderr(moves)
    return results
