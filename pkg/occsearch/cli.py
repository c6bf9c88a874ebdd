"""
occsearch command line

    occsearch run experiment.xml [--workers N]
    occsearch synth out_dir [--rotations 10] [--fraction 0.25] [--seed 0]
    occsearch eval dataset_dir --completer prism_hull -o chamfer.csv
    occsearch replay trace.xml
    occsearch scenes list
    occsearch scenes emit A -o scene_a.xml

Every subcommand takes --log_level (default: WARN). The worker pool size
for run comes from --workers, else the OCCSEARCH_WORKERS environment
variable, else 1.

Exit status is 0 on success and 1 when a file could not be read or the run
had to stop.
"""
import argparse
import logging
import os
import sys

from . import SceneFileError
from .completion import COMPLETERS, OccluderSpec, default_shapes, evaluate_completer, \
    get_completer, load_dataset, save_dataset, split_dataset, synthesize_dataset, \
    write_evaluation_csv
from .episode import EpisodeTrace, replay_trace
from .harness import load_experiment, run_experiment, scenario_library, worker_count
from .scene import save_scene
from . import etree, validate

logger = logging.getLogger()


def _add_log_level(parser):
    parser.add_argument(
        "--log_level",
        action="store",
        dest="log_level",
        help="Set log verbosity (default: WARN)",
        required=False,
        default="WARN"
    )


def _configure_logging(level):
    logger.setLevel(level)
    ch = logging.StreamHandler()
    ch.setLevel(level)
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    ch.setFormatter(formatter)
    logger.addHandler(ch)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="occsearch",
        description="search for a hidden object in simulated clutter")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    run = commands.add_parser("run", help="run an experiment file")
    run.add_argument("experiment", help="experiment XML file")
    run.add_argument(
        "--workers",
        type=int,
        dest="workers",
        help="worker processes (default: $OCCSEARCH_WORKERS or 1)",
        default=None
    )
    run.add_argument(
        "--no_progress",
        action="store_true",
        dest="no_progress",
        help="hide the progress bar"
    )
    _add_log_level(run)

    synth = commands.add_parser("synth", help="synthesize an occluded completion dataset")
    synth.add_argument("output", help="dataset directory")
    synth.add_argument("--rotations", type=int, default=10,
                       help="orientations per shape (default: 10)")
    synth.add_argument("--fraction", type=float, default=0.25,
                       help="image fraction hidden by the occluder (default: 0.25)")
    synth.add_argument("--quadrant", type=int, default=None, choices=range(4),
                       help="occluded image corner (default: random per example)")
    synth.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    synth.add_argument("--split", action="store_true",
                       help="write train/ and test/ subdirectories split 4:1")
    _add_log_level(synth)

    evaluate = commands.add_parser("eval", help="Chamfer distance of a completer on a dataset")
    evaluate.add_argument("dataset", help="dataset directory")
    evaluate.add_argument("--completer", choices=sorted(COMPLETERS), default="prism_hull")
    evaluate.add_argument("-o", "--output", dest="output", required=True,
                          help="CSV with columns example_id, shape, chamfer")
    _add_log_level(evaluate)

    replay = commands.add_parser("replay", help="re-run a recorded episode and diff it")
    replay.add_argument("trace", help="EpisodeTrace XML file")
    _add_log_level(replay)

    scenes = commands.add_parser("scenes", help="built-in scenes")
    scene_commands = scenes.add_subparsers(dest="scene_command", metavar="action")
    scene_commands.required = True
    listing = scene_commands.add_parser("list", help="print scene names")
    _add_log_level(listing)
    emit = scene_commands.add_parser("emit", help="write a scene file")
    emit.add_argument("name", help="scene name")
    emit.add_argument("-o", "--output", dest="output", default=None,
                      help="scene file (default: stdout)")
    _add_log_level(emit)
    return parser


def cmd_run(args, parser):
    try:
        workers = worker_count(args.workers)
    except ValueError as e:
        parser.error(str(e))
    spec = load_experiment(args.experiment)
    table = run_experiment(spec, workers, progress=not args.no_progress)
    for (scene, config), cell in table.cells().items():
        print("{}\t{}\t{:.3f} +/- {:.3f}\tsuccess {:.3f}".format(
            scene, config, cell.mean_moves, cell.stderr, cell.success_ratio))
    return 0


def cmd_synth(args, parser):
    try:
        occluder = OccluderSpec(args.fraction, args.quadrant)
    except ValueError as e:
        parser.error(str(e))
    if args.rotations < 1:
        parser.error("--rotations should be at least 1")
    triples = synthesize_dataset(default_shapes(), args.rotations, occluder, seed=args.seed)
    if args.split:
        train, test = split_dataset(triples)
        save_dataset(train, os.path.join(args.output, "train"))
        save_dataset(test, os.path.join(args.output, "test"))
    else:
        save_dataset(triples, args.output)
    print("{} examples written to {}".format(len(triples), args.output))
    return 0


def cmd_eval(args, parser):
    dataset = load_dataset(args.dataset)
    if not dataset:
        parser.error("dataset {} is empty".format(args.dataset))
    stats = evaluate_completer(get_completer(args.completer), dataset)
    write_evaluation_csv(stats, args.output)
    print("{}\tmean {:.6g}\tstderr {:.6g}\tfailed {}".format(
        args.completer, stats.mean, stats.stderr, stats.failures))
    return 0


def cmd_replay(args, parser):
    try:
        tree = etree.parse(args.trace)
    except etree.XMLSyntaxError as e:
        raise SceneFileError(e.msg, args.trace, e.lineno)
    valid, error = validate(tree.getroot())
    if not valid:
        last = error.error_log.last_error
        raise SceneFileError(last.message, args.trace, last.line)
    trace = EpisodeTrace.parse(tree.getroot(), os.path.dirname(os.path.abspath(args.trace)))
    differences = replay_trace(trace)
    for line in differences:
        print(line)
    if differences:
        logger.error("replay of %s differs in %d places", args.trace, len(differences))
        return 1
    print("replayed {} moves identically".format(trace.moves))
    return 0


def cmd_scenes(args, parser):
    library = scenario_library()
    if args.scene_command == "list":
        for name, scene in library.items():
            print("{}\t{} objects".format(name, len(scene.objects)))
        return 0
    if args.name not in library:
        parser.error("unknown scene {}, choose from {}".format(
            args.name, ", ".join(library)))
    scene = library[args.name]
    if args.output is None:
        sys.stdout.write(scene.pretty_print().decode("utf-8"))
    else:
        save_scene(scene, args.output)
    return 0


COMMANDS = {
    "run": cmd_run,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "replay": cmd_replay,
    "scenes": cmd_scenes,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    logger.debug(args)
    try:
        return COMMANDS[args.command](args, parser)
    except (SceneFileError, OSError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
