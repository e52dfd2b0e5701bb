"""Per-era metric frames and their CSV / manifest output."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .. import __version__


@dataclass
class MetricsFrame:
    era: int
    active_validators: int = 0
    min_active_stake: int = 0
    total_active_stake: int = 0
    fraction_full_commission: float = 0.0
    authored_blocks: int = 0
    finalized_blocks: int = 0
    # largest gap in slots between authoring and finalization this era
    finality_lag: int = 0
    # share of slots ending with honest validators on different best chains
    fork_rate: float = 0.0
    conflicting_finalizations: int = 0
    para_included: int = 0
    para_disputed: int = 0
    para_unavailable: int = 0
    invalid_finalized: int = 0
    equivocations: int = 0
    reversion_attempts: int = 0
    unresponsive: int = 0
    dispute_offenders: int = 0
    slashed: int = 0
    fees: int = 0
    rewards_paid: int = 0
    minted: int = 0
    treasury: int = 0
    total_issuance: int = 0
    tags: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = asdict(self)
        out.pop("tags")
        return out


FAMILIES: dict[str, list[str]] = {
    "consensus": ["era", "authored_blocks", "finalized_blocks", "finality_lag", "fork_rate",
                  "conflicting_finalizations"],
    "staking": ["era", "active_validators", "min_active_stake", "total_active_stake",
                "fraction_full_commission"],
    "parachains": ["era", "para_included", "para_disputed", "para_unavailable",
                   "invalid_finalized"],
    "security": ["era", "equivocations", "reversion_attempts", "unresponsive",
                 "dispute_offenders", "slashed"],
    "economy": ["era", "fees", "rewards_paid", "minted", "treasury", "total_issuance"],
}

ALL_FIELDS = [f.name for f in fields(MetricsFrame) if f.name != "tags"]


def write_frames_csv(frames: list[MetricsFrame], path: str | Path,
                     columns: list[str] | None = None) -> Path:
    """Tag columns (sorted) come first so sweep output stays self-describing."""
    path = Path(path)
    columns = ALL_FIELDS if columns is None else columns
    tag_keys = sorted({k for f in frames for k in f.tags})
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(tag_keys + columns)
        for frame in frames:
            row = frame.row()
            w.writerow([frame.tags.get(k, "") for k in tag_keys] + [row[c] for c in columns])
    return path


def write_families(frames: list[MetricsFrame], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [write_frames_csv(frames, out_dir / f"{name}.csv", cols)
            for name, cols in FAMILIES.items()]


def write_manifest(out_dir: str | Path, config_hash: str, seed: int, **extra) -> Path:
    path = Path(out_dir) / "manifest.json"
    body = {"config_hash": config_hash, "seed": seed, "code_version": __version__, **extra}
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return path
