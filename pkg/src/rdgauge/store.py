"""Append-only JSON-lines store of benchmark measurements.

One self-describing record per line, UTF-8, so appends are resumable,
diffs are readable, and a crash mid-write costs at most the trailing
line. Duplicate keys are resolved at load time, keeping the newest
record (re-runs supersede).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import StoreImportError, StoreLoadError, StoreValidationError

log = logging.getLogger(__name__)

# Wire field names, in line order.
FIELDS = ("clip", "family", "preset", "passes", "tbr_kbps", "kbps", "vmaf",
          "psnr_y", "enc_s", "bytes", "tool", "ts")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


@dataclass
class MetricRecord:
    """One persisted benchmark outcome."""

    clip_id: str
    family: str
    preset: str
    passes: int
    target_kbps: float
    measured_kbps: float
    vmaf: Optional[float] = None  # absent until the metric pass runs
    psnr_y: Optional[float] = None
    encode_seconds: Optional[float] = None  # absent for imported rows
    output_bytes: Optional[int] = None
    tool_version: str = ""
    created_at: str = field(default_factory=_now)

    def key(self) -> tuple:
        return (self.clip_id, self.family, self.preset, self.passes,
                self.target_kbps)

    def validate(self) -> None:
        if not self.clip_id or not self.family or not self.preset:
            raise StoreValidationError("clip, family and preset must be non-empty")
        if self.passes not in (1, 2):
            raise StoreValidationError(f"passes must be 1 or 2, got {self.passes}")
        if not (self.target_kbps > 0):
            raise StoreValidationError(f"target_kbps must be > 0, got {self.target_kbps}")
        if not (self.measured_kbps > 0):
            raise StoreValidationError(
                f"measured_kbps must be > 0, got {self.measured_kbps}")
        if self.vmaf is not None and not (0.0 <= self.vmaf <= 100.0):
            raise StoreValidationError(f"vmaf out of [0, 100]: {self.vmaf}")
        if self.psnr_y is not None and not math.isfinite(self.psnr_y):
            raise StoreValidationError(f"psnr_y must be finite, got {self.psnr_y}")
        if self.encode_seconds is not None and self.encode_seconds < 0:
            raise StoreValidationError(
                f"encode_seconds must be >= 0, got {self.encode_seconds}")

    def to_line(self) -> str:
        row = {
            "clip": self.clip_id,
            "family": self.family,
            "preset": self.preset,
            "passes": self.passes,
            "tbr_kbps": self.target_kbps,
            "kbps": self.measured_kbps,
            "vmaf": self.vmaf,
            "psnr_y": self.psnr_y,
            "enc_s": self.encode_seconds,
            "bytes": self.output_bytes,
            "tool": self.tool_version,
            "ts": self.created_at,
        }
        return json.dumps(row, ensure_ascii=False)

    @classmethod
    def from_line(cls, line: str) -> "MetricRecord":
        row = json.loads(line)
        return cls(
            clip_id=row["clip"],
            family=row["family"],
            preset=str(row["preset"]),
            passes=int(row["passes"]),
            target_kbps=row["tbr_kbps"],
            measured_kbps=row["kbps"],
            vmaf=row.get("vmaf"),
            psnr_y=row.get("psnr_y"),
            encode_seconds=row.get("enc_s"),
            output_bytes=row.get("bytes"),
            tool_version=row.get("tool", ""),
            created_at=row.get("ts", ""),
        )


def append(path: Union[str, Path], record: MetricRecord) -> None:
    """Validate and append one record as a single atomic line write."""
    record.validate()
    line = record.to_line()
    if "\n" in line:
        raise StoreValidationError("record serialises to multiple lines")
    with open(path, "a", encoding="utf-8") as f:
        f.write(line + "\n")
        f.flush()


def load(
    path: Union[str, Path],
    where: Optional[Callable[[MetricRecord], bool]] = None,
) -> list[MetricRecord]:
    """Deduped (keep-latest), filtered records in deterministic order.

    A malformed trailing line is assumed to be a crashed write and is
    skipped with a warning; a malformed line anywhere else is an error.
    """
    path = Path(path)
    if not path.exists():
        return []
    raw = path.read_text(encoding="utf-8").split("\n")
    if raw and raw[-1] == "":
        raw.pop()

    records: dict[tuple, tuple[str, int, MetricRecord]] = {}
    for idx, line in enumerate(raw):
        try:
            rec = MetricRecord.from_line(line)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if idx == len(raw) - 1:
                log.warning("ignoring partial trailing line %d in %s", idx + 1, path)
                continue
            raise StoreLoadError(f"{path}: malformed line {idx + 1}: {exc}") from exc
        seen = records.get(rec.key())
        if seen is None or (rec.created_at, idx) >= (seen[0], seen[1]):
            records[rec.key()] = (rec.created_at, idx, rec)

    out = [rec for (_, _, rec) in records.values()]
    if where is not None:
        out = [rec for rec in out if where(rec)]
    out.sort(key=lambda r: (r.key(), r.created_at))
    return out


def has_key(path: Union[str, Path], key: tuple) -> bool:
    """True when a record with this dedupe key is already stored."""
    return any(rec.key() == key for rec in load(path))


def import_table(
    path: Union[str, Path],
    rows: Iterable[Sequence],
    *,
    family: str,
    preset: str,
    passes: int,
    target_kbps: float,
    clip_prefix: str = "",
    tool_version: str = "imported",
) -> int:
    """Append externally produced rows (label, kbps, vmaf, psnr[, enc_s]).

    Each row becomes a record under the synthetic clip id
    ``clip_prefix + label``. Encode time may be missing. Returns the
    number of records appended.
    """
    count = 0
    for row in rows:
        if len(row) < 4:
            raise StoreImportError(f"row too short: {row!r}")
        label, kbps, vmaf, psnr = row[0], row[1], row[2], row[3]
        enc_s = row[4] if len(row) > 4 else None
        try:
            rec = MetricRecord(
                clip_id=f"{clip_prefix}{label}",
                family=family,
                preset=preset,
                passes=passes,
                target_kbps=float(target_kbps),
                measured_kbps=float(kbps),
                vmaf=float(vmaf),
                psnr_y=float(psnr),
                encode_seconds=None if enc_s in (None, "") else float(enc_s),
                tool_version=tool_version,
            )
        except (TypeError, ValueError) as exc:
            raise StoreImportError(f"bad row {row!r}: {exc}") from exc
        try:
            append(path, rec)
        except StoreValidationError as exc:
            raise StoreImportError(f"bad row {row!r}: {exc}") from exc
        count += 1
    return count
