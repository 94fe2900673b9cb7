"""Dispatch validated experiment configs and write CSV/JSON reports."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass
from typing import Optional

from smilab import identities, tail_stats
from smilab.config import Experiment, ExperimentConfig
from smilab.ensembles import SeedPath, density_bound_check

__all__ = ["Verdict", "RunReport", "run", "csv_text", "format_value", "CSV_HEADERS"]


class Verdict:
    PASS = "PASS"
    FAIL = "FAIL"
    REPORT_ONLY = "REPORT_ONLY"


_TAIL_HEADER = ["t", "threshold", "exceed_count", "trials", "empirical", "ci_lower",
                "ci_upper", "bound", "capped_bound", "pass"]
CSV_HEADERS = {
    Experiment.THEOREM_TAIL: _TAIL_HEADER,
    Experiment.SST_TAIL: _TAIL_HEADER,
    Experiment.ENTRY_TAIL: _TAIL_HEADER,
    Experiment.COUNTEREXAMPLE: ["d", "trials", "median_norm", "scaled_median", "exceed_fraction", "pass"],
    Experiment.HAGELSTEIN: ["components", "trials", "left", "right", "ratio", "pass"],
    Experiment.GINIBRE_LOWER: ["n", "trials", "threshold", "exceed_fraction", "excluded", "pass"],
    Experiment.IDENTITY_SUITE: ["identity", "cases", "max_residual", "tolerance", "pass"],
    Experiment.DENSITY_CHECK: ["family", "K", "samples", "bin_width", "max_density", "pass"],
}


@dataclass
class RunReport:
    config: ExperimentConfig
    payload: dict
    rows: list
    wall_time: float
    excluded_draws: int
    verdict: str
    csv_path: Optional[str] = None
    json_path: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "verdict": self.verdict,
            "excluded_draws": self.excluded_draws,
            "wall_time": self.wall_time,
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True) + "\n"


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def csv_text(experiment: Experiment, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = CSV_HEADERS[experiment]
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(row[k]) for k in header])
    return buf.getvalue()


def _verdict(passed: bool) -> str:
    return Verdict.PASS if passed else Verdict.FAIL


def _dispatch(cfg: ExperimentConfig, workers: int):
    """Return ``(payload, rows, excluded, verdict)``."""
    exp = cfg.experiment
    seed = cfg.master_seed
    if exp is Experiment.THEOREM_TAIL:
        rep = tail_stats.check_theorem_bound(cfg.ensemble, cfg.trials, cfg.t_grid, seed, workers)
        return rep.to_dict(), list(rep.rows()), rep.excluded, _verdict(rep.passed)
    if exp is Experiment.SST_TAIL:
        rep = tail_stats.check_sst_bound(cfg.ensemble.n, cfg.ensemble.shift, cfg.trials, cfg.t_grid, seed, workers)
        return rep.to_dict(), list(rep.rows()), rep.excluded, _verdict(rep.passed)
    if exp is Experiment.ENTRY_TAIL:
        i, j = cfg.entry
        rep = identities.verify_entry_tail_pointwise(cfg.ensemble, i, j, cfg.trials, cfg.t_grid, seed, workers)
        return rep.to_dict(), list(rep.rows()), rep.excluded, _verdict(rep.passed)
    if exp is Experiment.COUNTEREXAMPLE:
        rep = tail_stats.counterexample_growth(cfg.ensemble.n, cfg.d_list, cfg.trials, seed, workers, cfg.quantile)
        rows = [{"d": r.d, "trials": r.trials, "median_norm": r.median_norm, "scaled_median": r.scaled_median,
                 "exceed_fraction": r.exceed_fraction, "pass": r.passed} for r in rep.rows]
        return rep.to_dict(), rows, rep.excluded, _verdict(rep.passed)
    if exp is Experiment.HAGELSTEIN:
        reps = [tail_stats.check_hagelstein(m, cfg.trials, seed) for m in cfg.components]
        rows = [{"components": r.component_count, "trials": r.trials, "left": r.left, "right": r.right,
                 "ratio": r.ratio, "pass": r.passed} for r in reps]
        payload = {"passed": all(r.passed for r in reps), "reports": [r.to_dict() for r in reps]}
        return payload, rows, 0, _verdict(payload["passed"])
    if exp is Experiment.GINIBRE_LOWER:
        rep = tail_stats.check_ginibre_lower(cfg.ensemble.n, cfg.trials, seed, workers)
        row = {"n": rep.n, "trials": rep.trials, "threshold": rep.threshold,
               "exceed_fraction": rep.exceed_fraction, "excluded": rep.excluded, "pass": rep.passed}
        verdict = _verdict(rep.passed) if rep.asserted else Verdict.REPORT_ONLY
        return rep.to_dict(), [row], rep.excluded, verdict
    if exp is Experiment.IDENTITY_SUITE:
        rep = identities.identity_suite(cfg.cases, cfg.n_max, seed, workers)
        return rep.to_dict(), list(rep.rows()), 0, _verdict(rep.passed)
    if exp is Experiment.DENSITY_CHECK:
        rep = density_bound_check(cfg.ensemble, cfg.samples, SeedPath(seed, 0))
        row = {"family": rep.family.value, "K": rep.K, "samples": rep.samples, "bin_width": rep.bin_width,
               "max_density": rep.max_density, "pass": rep.passed}
        payload = dict(row, argmax_center=rep.argmax_center, passed=rep.passed)
        return payload, [row], 0, _verdict(rep.passed)
    raise AssertionError(f"unhandled experiment {exp}")


def run(cfg: ExperimentConfig, workers: Optional[int] = None, write: bool = True) -> RunReport:
    """Run one experiment.

    ``workers`` overrides ``cfg.workers``. With ``write`` and an
    ``output_path``, writes ``<output_path>/<experiment>.csv`` and
    ``<output_path>/summary.json``. I/O errors propagate as ``OSError``.
    """
    nworkers = cfg.workers if workers is None else workers
    start = time.perf_counter()
    payload, rows, excluded, verdict = _dispatch(cfg, nworkers)
    report = RunReport(config=cfg, payload=payload, rows=rows, wall_time=time.perf_counter() - start,
                       excluded_draws=int(excluded), verdict=verdict)
    if write and cfg.output_path:
        os.makedirs(cfg.output_path, exist_ok=True)
        report.csv_path = os.path.join(cfg.output_path, f"{cfg.experiment.value}.csv")
        report.json_path = os.path.join(cfg.output_path, "summary.json")
        with open(report.csv_path, "w", newline="") as fh:
            fh.write(csv_text(cfg.experiment, rows))
        with open(report.json_path, "w") as fh:
            fh.write(report.to_json())
    return report
