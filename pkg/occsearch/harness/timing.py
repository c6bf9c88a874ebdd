"""
Per-stage wall clock over a set of episodes
"""
from collections import OrderedDict
from collections.abc import Mapping
import csv

from ..episode import STAGES

TIMING_COLUMNS = ("stage", "episodes", "mean_seconds")


def timing_report(traces):
    """
    Mean seconds per episode spent in each pipeline stage

    traces: EpisodeTraces, or mappings of stage to seconds such as
        EpisodeTrace.stage_totals()
    """
    totals = OrderedDict((stage, 0.0) for stage in STAGES)
    count = 0
    for trace in traces:
        stages = trace if isinstance(trace, Mapping) else trace.stage_totals()
        for stage in STAGES:
            totals[stage] += stages.get(stage, 0.0)
        count += 1
    if count == 0:
        return OrderedDict()
    return OrderedDict((stage, seconds / count) for stage, seconds in totals.items())


def write_timing_csv(report, path, episodes=None):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TIMING_COLUMNS)
        for stage, seconds in report.items():
            writer.writerow([stage, "" if episodes is None else episodes,
                             "{:.6f}".format(seconds)])
