"""Dataset ingestion and utility-model estimation.

Inputs are three flat files:

* scan dataset (JSON Lines): one object per scanned malware file with its
  CVE tags and per-tool ``{"ran": bool, "detected": bool}`` outcomes;
* benign dataset: same schema with empty ``cves`` (drives false positives);
* vulnerability scores (CSV ``cve,impact,exploitability``): 0-10 severity
  and attack-difficulty ratings per CVE.

Detection probabilities use the union rule over a schedule's tools, with
pseudocount smoothing toward 1/2 for thinly observed CVEs.  False-positive
rates stay raw (the benign corpus is assumed large).  The bulk counting
over every (schedule, vulnerability) pair is the hot kernel.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from ._accel import USING_NUMBA, njit
from .game import Schedule, ToolId, TradeoffParams, UtilityModel, VulnId

__all__ = [
    "DatasetError",
    "ScanOutcome",
    "ScanRecord",
    "NvdScore",
    "DetectionStats",
    "EstimationConfig",
    "load_scan_dataset",
    "load_nvd_scores",
    "estimate_tool_detection",
    "estimate_schedule_detection",
    "estimate_fp_rate",
    "derive_rewards_costs",
    "vuln_prior",
    "tool_universe",
    "vuln_universe",
    "detection_matrix",
    "fp_rates",
    "build_utility_model",
]

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """A dataset file is malformed or violates a record invariant."""


class ScanOutcome(NamedTuple):
    ran: bool
    detected: bool


@dataclass(frozen=True)
class ScanRecord:
    """One scanned file: its CVE tags and per-tool outcomes."""

    file_id: str
    cves: tuple[str, ...]
    scans: Mapping[str, ScanOutcome]

    @property
    def tagged(self) -> bool:
        return bool(self.cves)


@dataclass(frozen=True)
class NvdScore:
    """Severity (impact) and attack difficulty (exploitability), both 0-10."""

    cve: str
    impact: float
    exploitability: float

    def __post_init__(self):
        for label, score in (("impact", self.impact), ("exploitability", self.exploitability)):
            if not np.isfinite(score) or not 0.0 <= score <= 10.0:
                raise ValueError(f"{label} for {self.cve} must lie in [0, 10], got {score}")


@dataclass(frozen=True)
class DetectionStats:
    """Raw detection counts for one (schedule-or-tool, vulnerability) pair."""

    detected_count: int
    ran_count: int

    def __post_init__(self):
        if self.detected_count < 0 or self.ran_count < 0:
            raise ValueError("counts must be non-negative")
        if self.detected_count > self.ran_count:
            raise ValueError(
                f"detected on {self.detected_count} files but ran on only {self.ran_count}"
            )

    def smoothed(self, pseudocount: int) -> float:
        """(detected + n) / (ran + 2n); 1/2 when there is no evidence at all."""
        den = self.ran_count + 2 * pseudocount
        if den == 0:
            return 0.5
        return (self.detected_count + pseudocount) / den


@dataclass(frozen=True)
class EstimationConfig:
    pseudocount_n: int = 2

    def __post_init__(self):
        if self.pseudocount_n < 0:
            raise ValueError(f"pseudocount must be >= 0, got {self.pseudocount_n}")


# ---------------------------------------------------------------------------
# Loading.


def _parse_scan_record(obj, where: str) -> ScanRecord:
    if not isinstance(obj, dict):
        raise DatasetError(f"{where}: expected a JSON object, got {type(obj).__name__}")
    file_id = obj.get("file_id")
    if not isinstance(file_id, str) or not file_id:
        raise DatasetError(f"{where}: 'file_id' must be a non-empty string")
    cves = obj.get("cves")
    if not isinstance(cves, list) or any(not isinstance(c, str) or not c for c in cves):
        raise DatasetError(f"{where}: 'cves' must be a list of non-empty strings")
    raw_scans = obj.get("scans")
    if not isinstance(raw_scans, dict):
        raise DatasetError(f"{where}: 'scans' must be an object keyed by tool name")
    scans = {}
    for tool, outcome in raw_scans.items():
        if not isinstance(outcome, dict):
            raise DatasetError(f"{where}: scan entry for {tool!r} must be an object")
        ran = outcome.get("ran")
        detected = outcome.get("detected")
        if not isinstance(ran, bool) or not isinstance(detected, bool):
            raise DatasetError(f"{where}: {tool!r} needs boolean 'ran' and 'detected'")
        if detected and not ran:
            raise DatasetError(f"{where}: {tool!r} reports a detection without running")
        scans[tool] = ScanOutcome(ran, detected)
    return ScanRecord(file_id, tuple(cves), scans)


def load_scan_dataset(path) -> list[ScanRecord]:
    """Read a JSON-Lines scan dataset, validating every record."""
    records: list[ScanRecord] = []
    seen: set[str] = set()
    untagged = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{where}: invalid JSON: {exc}") from exc
            record = _parse_scan_record(obj, where)
            if record.file_id in seen:
                raise DatasetError(f"{where}: duplicate file_id {record.file_id!r}")
            seen.add(record.file_id)
            if not record.tagged:
                untagged += 1
            records.append(record)
    if untagged:
        logger.info("%s: %d of %d records carry no CVE tags", path, untagged, len(records))
    return records


_NVD_HEADER = ["cve", "impact", "exploitability"]


def load_nvd_scores(path) -> dict[str, NvdScore]:
    """Read the vulnerability-score CSV into a map keyed by CVE."""
    scores: dict[str, NvdScore] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _NVD_HEADER:
            raise DatasetError(
                f"{path}: header must be exactly {','.join(_NVD_HEADER)!r}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}:{lineno}"
            if len(row) != 3:
                raise DatasetError(f"{where}: expected 3 fields, got {len(row)}")
            cve = row[0]
            try:
                score = NvdScore(cve, float(row[1]), float(row[2]))
            except ValueError as exc:
                raise DatasetError(f"{where}: {exc}") from exc
            if cve in scores:
                raise DatasetError(f"{where}: duplicate CVE {cve!r}")
            scores[cve] = score
    return scores


# ---------------------------------------------------------------------------
# Universes.  Tool names sort lexicographically so indices are stable across
# runs regardless of record order; CVEs likewise.


def tool_universe(records: Sequence[ScanRecord]) -> list[ToolId]:
    names = sorted({tool for rec in records for tool in rec.scans})
    return [ToolId(name, i) for i, name in enumerate(names)]


def vuln_universe(records: Sequence[ScanRecord]) -> list[VulnId]:
    cves = sorted({cve for rec in records for cve in rec.cves})
    return [VulnId(cve, i) for i, cve in enumerate(cves)]


# ---------------------------------------------------------------------------
# Per-pair estimators.


def _count_schedule(records, tool_names, cve) -> DetectionStats:
    ran = det = 0
    for rec in records:
        if cve is not None and cve not in rec.cves:
            continue
        ran_any = False
        det_any = False
        for name in tool_names:
            outcome = rec.scans.get(name)
            if outcome is None or not outcome.ran:
                continue
            ran_any = True
            if outcome.detected:
                det_any = True
                break
        if ran_any:
            ran += 1
            det += det_any
    return DetectionStats(det, ran)


def estimate_tool_detection(
    records: Sequence[ScanRecord],
    tool: ToolId,
    vuln: VulnId,
    cfg: EstimationConfig = EstimationConfig(),
) -> float:
    """Smoothed probability that a single tool detects attacks on a CVE."""
    stats = _count_schedule(records, (tool.name,), vuln.cve)
    return stats.smoothed(cfg.pseudocount_n)


def estimate_schedule_detection(
    records: Sequence[ScanRecord],
    schedule: Schedule,
    vuln: VulnId,
    cfg: EstimationConfig = EstimationConfig(),
) -> float:
    """Smoothed union-rule detection probability for a schedule.

    Counts files tagged with the CVE on which at least one of the
    schedule's tools ran; a file counts as detected when any of them
    flagged it.  Tool correlation is therefore captured empirically.
    """
    names = tuple(t.name for t in schedule.tools)
    stats = _count_schedule(records, names, vuln.cve)
    return stats.smoothed(cfg.pseudocount_n)


def estimate_fp_rate(benign_records: Sequence[ScanRecord], schedule: Schedule) -> float:
    """Raw false-positive rate of a schedule on the benign corpus.

    No smoothing here; with no evidence at all the rate is 0, logged as a
    warning.
    """
    for rec in benign_records:
        if rec.tagged:
            raise DatasetError(f"benign record {rec.file_id!r} carries CVE tags {rec.cves}")
    names = tuple(t.name for t in schedule.tools)
    stats = _count_schedule(benign_records, names, None)
    if stats.ran_count == 0:
        logger.warning("no benign file ran any tool of %s; assuming zero false positives",
                       schedule.name)
        return 0.0
    return stats.detected_count / stats.ran_count


def derive_rewards_costs(
    scores: Mapping[str, NvdScore],
    vulns: Sequence[VulnId],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(reward_a, reward_d, cost_a) per vulnerability.

    Attacker reward is the impact score, mirrored as the defender's
    penalty; attacker cost is the exploitability score.
    """
    r_a = np.empty(len(vulns))
    c_a = np.empty(len(vulns))
    for v in vulns:
        score = scores.get(v.cve)
        if score is None:
            raise KeyError(f"no score available for {v.cve}")
        r_a[v.index] = score.impact
        c_a[v.index] = score.exploitability
    return r_a, -r_a, c_a


def vuln_prior(records: Sequence[ScanRecord], vulns: Sequence[VulnId]) -> np.ndarray:
    """Occurrence-frequency prior; files with several CVEs count once each."""
    counts = np.zeros(len(vulns))
    index = {v.cve: v.index for v in vulns}
    for rec in records:
        for cve in rec.cves:
            i = index.get(cve)
            if i is not None:
                counts[i] += 1
    total = counts.sum()
    if total == 0:
        raise ValueError("no file is tagged with any of the given vulnerabilities")
    return counts / total


# ---------------------------------------------------------------------------
# Bulk counting over every (schedule, vulnerability) pair.


def _scan_arrays(records, tools: Sequence[ToolId], vulns: Sequence[VulnId]):
    tool_idx = {t.name: t.index for t in tools}
    vuln_idx = {v.cve: v.index for v in vulns}
    n_files = len(records)
    ran = np.zeros((n_files, len(tools)), np.uint8)
    det = np.zeros((n_files, len(tools)), np.uint8)
    tagged = np.zeros((n_files, len(vulns)), np.uint8)
    for f, rec in enumerate(records):
        for name, outcome in rec.scans.items():
            t = tool_idx.get(name)
            if t is None:
                continue
            ran[f, t] = outcome.ran
            det[f, t] = outcome.detected
        for cve in rec.cves:
            v = vuln_idx.get(cve)
            if v is not None:
                tagged[f, v] = 1
    return ran, det, tagged


def _schedule_index_table(schedules: Sequence[Schedule]):
    width = max(len(s) for s in schedules)
    table = np.full((len(schedules), width), -1, np.int64)
    length = np.empty(len(schedules), np.int64)
    for i, s in enumerate(schedules):
        idx = s.indices
        table[i, : len(idx)] = idx
        length[i] = len(idx)
    return table, length


def _detection_counts_py(tagged, ran, det, sched_tools, sched_len):
    n_files, n_vulns = tagged.shape
    n_sched = sched_tools.shape[0]
    num = np.zeros((n_sched, n_vulns), np.int64)
    den = np.zeros((n_sched, n_vulns), np.int64)
    for s in range(n_sched):
        k = sched_len[s]
        for f in range(n_files):
            ran_any = False
            det_any = False
            for j in range(k):
                t = sched_tools[s, j]
                if ran[f, t]:
                    ran_any = True
                    if det[f, t]:
                        det_any = True
                        break
            if not ran_any:
                continue
            for v in range(n_vulns):
                if tagged[f, v]:
                    den[s, v] += 1
                    if det_any:
                        num[s, v] += 1
    return num, den


_detection_counts_jit = njit(cache=True)(_detection_counts_py)


def _detection_counts_np(tagged, ran, det, sched_tools, sched_len):
    n_sched = sched_tools.shape[0]
    n_vulns = tagged.shape[1]
    num = np.zeros((n_sched, n_vulns), np.int64)
    den = np.zeros((n_sched, n_vulns), np.int64)
    tagged_i = tagged.astype(np.int64)
    for s in range(n_sched):
        tools = sched_tools[s, : sched_len[s]]
        ran_any = ran[:, tools].any(axis=1)
        det_any = det[:, tools].any(axis=1)
        den[s] = ran_any.astype(np.int64) @ tagged_i
        num[s] = det_any.astype(np.int64) @ tagged_i
    return num, den


def _fp_counts_py(ran, det, sched_tools, sched_len):
    n_files = ran.shape[0]
    n_sched = sched_tools.shape[0]
    num = np.zeros(n_sched, np.int64)
    den = np.zeros(n_sched, np.int64)
    for s in range(n_sched):
        k = sched_len[s]
        for f in range(n_files):
            ran_any = False
            det_any = False
            for j in range(k):
                t = sched_tools[s, j]
                if ran[f, t]:
                    ran_any = True
                    if det[f, t]:
                        det_any = True
                        break
            if ran_any:
                den[s] += 1
                if det_any:
                    num[s] += 1
    return num, den


_fp_counts_jit = njit(cache=True)(_fp_counts_py)


def _fp_counts_np(ran, det, sched_tools, sched_len):
    n_sched = sched_tools.shape[0]
    num = np.zeros(n_sched, np.int64)
    den = np.zeros(n_sched, np.int64)
    for s in range(n_sched):
        tools = sched_tools[s, : sched_len[s]]
        den[s] = ran[:, tools].any(axis=1).sum()
        num[s] = det[:, tools].any(axis=1).sum()
    return num, den


if USING_NUMBA:
    _detection_counts = _detection_counts_jit
    _fp_counts = _fp_counts_jit
else:
    _detection_counts = _detection_counts_np
    _fp_counts = _fp_counts_np


def detection_matrix(
    records: Sequence[ScanRecord],
    schedules: Sequence[Schedule],
    tools: Sequence[ToolId],
    vulns: Sequence[VulnId],
    cfg: EstimationConfig = EstimationConfig(),
) -> np.ndarray:
    """Smoothed detection probabilities for every (schedule, vuln) pair."""
    ran, det, tagged = _scan_arrays(records, tools, vulns)
    table, length = _schedule_index_table(schedules)
    num, den = _detection_counts(tagged, ran, det, table, length)
    n = cfg.pseudocount_n
    den_s = den + 2 * n
    with np.errstate(invalid="ignore"):
        p = (num + n) / den_s
    return np.where(den_s == 0, 0.5, p)


def fp_rates(
    benign_records: Sequence[ScanRecord],
    schedules: Sequence[Schedule],
    tools: Sequence[ToolId],
) -> np.ndarray:
    """Raw false-positive rate per schedule over the benign corpus."""
    for rec in benign_records:
        if rec.tagged:
            raise DatasetError(f"benign record {rec.file_id!r} carries CVE tags {rec.cves}")
    ran, det, _ = _scan_arrays(benign_records, tools, ())
    table, length = _schedule_index_table(schedules)
    num, den = _fp_counts(ran, det, table, length)
    if (den == 0).any():
        logger.warning(
            "%d schedules were never run on a benign file; assuming zero false positives",
            int((den == 0).sum()),
        )
    with np.errstate(invalid="ignore"):
        rate = num / den
    return np.where(den == 0, 0.0, rate)


def build_utility_model(
    scan_records: Sequence[ScanRecord],
    benign_records: Sequence[ScanRecord],
    scores: Mapping[str, NvdScore],
    schedules: Sequence[Schedule],
    tools: Sequence[ToolId],
    vulns: Sequence[VulnId],
    tradeoffs: TradeoffParams,
    cfg: EstimationConfig = EstimationConfig(),
) -> UtilityModel:
    """Estimate every model parameter from the three datasets."""
    tagged_records = [r for r in scan_records if r.tagged]
    p = detection_matrix(tagged_records, schedules, tools, vulns, cfg)
    c_d = fp_rates(benign_records, schedules, tools)
    r_a, r_d, c_a = derive_rewards_costs(scores, vulns)
    prior = vuln_prior(tagged_records, vulns)
    return UtilityModel(p, r_a, r_d, c_a, c_d, tradeoffs, prior)
