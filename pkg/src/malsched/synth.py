"""Seeded synthetic datasets in the ingestion file formats.

Per-(tool, vulnerability) detection rates are Beta draws mixed with a
shared per-cluster profile, so tools fall into correlated blocks the way
real scanner families do.  The same seed always produces byte-identical
files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["SyntheticSpec", "generate_datasets"]


@dataclass(frozen=True)
class SyntheticSpec:
    num_tools: int = 8
    num_vulns: int = 5
    budget: int = 2
    num_files: int = 300
    num_benign: int = 150
    run_rate: float = 0.9
    detect_alpha: float = 2.0
    detect_beta: float = 2.0
    correlation_blocks: int = 2
    block_mix: float = 0.7
    fp_alpha: float = 1.0
    fp_beta: float = 6.0
    impact_low: float = 1.0
    impact_high: float = 10.0
    exploit_low: float = 0.0
    exploit_high: float = 10.0
    multi_tag_rate: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.num_tools < 1 or self.num_vulns < 1:
            raise ValueError("need at least one tool and one vulnerability")
        if not 1 <= self.budget <= self.num_tools:
            raise ValueError(f"budget must lie in [1, {self.num_tools}], got {self.budget}")
        if self.num_files < self.num_vulns:
            raise ValueError("need at least one file per vulnerability")
        if self.num_benign < 0:
            raise ValueError("num_benign must be >= 0")
        for label, value in (("run_rate", self.run_rate), ("block_mix", self.block_mix),
                             ("multi_tag_rate", self.multi_tag_rate)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{label} must lie in [0, 1], got {value}")
        if self.correlation_blocks < 1:
            raise ValueError("correlation_blocks must be >= 1")
        for label, lo, hi in (("impact", self.impact_low, self.impact_high),
                              ("exploit", self.exploit_low, self.exploit_high)):
            if not 0.0 <= lo <= hi <= 10.0:
                raise ValueError(f"{label} range must satisfy 0 <= low <= high <= 10")


def _tool_names(spec: SyntheticSpec) -> list[str]:
    return [f"t{i:03d}" for i in range(spec.num_tools)]


def _vuln_names(spec: SyntheticSpec) -> list[str]:
    return [f"CVE-2020-{1000 + i}" for i in range(spec.num_vulns)]


def _detection_rates(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    num_blocks = min(spec.correlation_blocks, spec.num_tools)
    blocks = rng.beta(spec.detect_alpha, spec.detect_beta,
                      size=(num_blocks, spec.num_vulns))
    own = rng.beta(spec.detect_alpha, spec.detect_beta,
                   size=(spec.num_tools, spec.num_vulns))
    block_of = (np.arange(spec.num_tools) * num_blocks) // spec.num_tools
    return spec.block_mix * blocks[block_of] + (1.0 - spec.block_mix) * own


def _record_line(file_id: str, cves: list[str], ran: np.ndarray, det: np.ndarray,
                 tools: list[str]) -> str:
    scans = {
        name: {"detected": bool(det[t]), "ran": bool(ran[t])}
        for t, name in enumerate(tools)
    }
    return json.dumps(
        {"cves": cves, "file_id": file_id, "scans": scans},
        sort_keys=True, separators=(",", ":"),
    )


def generate_datasets(spec: SyntheticSpec, out_dir) -> tuple[Path, Path, Path]:
    """Write scans.jsonl, benign.jsonl and nvd.csv under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    tools = _tool_names(spec)
    vulns = _vuln_names(spec)
    rates = _detection_rates(spec, rng)
    fp = rng.beta(spec.fp_alpha, spec.fp_beta, size=spec.num_tools)
    tag_weights = rng.dirichlet(np.ones(spec.num_vulns))

    scan_path = out / "scans.jsonl"
    with open(scan_path, "w", encoding="utf-8") as fh:
        for f in range(spec.num_files):
            # The first num_vulns files each get a forced tag so every
            # vulnerability occurs at least once.
            if f < spec.num_vulns:
                tags = [f]
            else:
                tags = [int(rng.choice(spec.num_vulns, p=tag_weights))]
            if spec.num_vulns > 1 and rng.random() < spec.multi_tag_rate:
                extra = int(rng.choice(spec.num_vulns, p=tag_weights))
                if extra not in tags:
                    tags.append(extra)
            ran = rng.random(spec.num_tools) < spec.run_rate
            # A tool catches the file if it detects any tagged CVE.
            miss = np.ones(spec.num_tools)
            for v in tags:
                miss *= 1.0 - rates[:, v]
            det = ran & (rng.random(spec.num_tools) < 1.0 - miss)
            fh.write(_record_line(f"mal-{f:05d}", [vulns[v] for v in sorted(tags)],
                                  ran, det, tools) + "\n")

    benign_path = out / "benign.jsonl"
    with open(benign_path, "w", encoding="utf-8") as fh:
        for f in range(spec.num_benign):
            ran = rng.random(spec.num_tools) < spec.run_rate
            det = ran & (rng.random(spec.num_tools) < fp)
            fh.write(_record_line(f"ben-{f:05d}", [], ran, det, tools) + "\n")

    nvd_path = out / "nvd.csv"
    impact = rng.uniform(spec.impact_low, spec.impact_high, size=spec.num_vulns)
    exploit = rng.uniform(spec.exploit_low, spec.exploit_high, size=spec.num_vulns)
    with open(nvd_path, "w", encoding="utf-8") as fh:
        fh.write("cve,impact,exploitability\n")
        for v, cve in enumerate(vulns):
            fh.write(f"{cve},{impact[v]:.1f},{exploit[v]:.1f}\n")
    return scan_path, benign_path, nvd_path
