"""External process execution and quality measurement.

Runs encoder processes with per-pass monotonic wall-clock timing,
persists outcomes through the results store, and invokes the external
VMAF tool over finished encodes. Completed (clip, family, preset,
passes, tbr) keys are skipped unless forced.
"""

from __future__ import annotations

import glob
import json
import logging
import os
import shutil
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from . import store as store_mod
from . import y4m
from .encoders import EncodeJob, build_commands, get_spec, job_paths
from .errors import MetricError, MetricParseError, MissingBinaryError
from .store import MetricRecord

log = logging.getLogger(__name__)

ENV_BIN_DIR = "RDGAUGE_BIN_DIR"
ENV_WORK_DIR = "RDGAUGE_WORK_DIR"

_STDERR_TAIL = 2000

# Store appends are funnelled through a single writer.
_store_lock = threading.Lock()
# Single-GPU assumption: NVENC jobs never overlap each other.
_nvenc_lock = threading.Lock()

_version_cache: dict[str, str] = {}


@dataclass
class JobOutcome:
    """Result of running (or skipping) one encode job."""

    job: EncodeJob
    status: str  # "ok" | "failed" | "skipped"
    wall_seconds: tuple[float, ...] = ()
    output_bytes: int = 0
    measured_kbps: float = 0.0
    output_path: str = ""
    stderr_tail: str = ""

    @property
    def total_seconds(self) -> float:
        return float(sum(self.wall_seconds))


def resolve_binary(name: str, bin_dir: Optional[Union[str, Path]] = None) -> str:
    """Locate a tool, preferring the configured binary directory."""
    bin_dir = bin_dir or os.environ.get(ENV_BIN_DIR)
    if bin_dir:
        candidate = Path(bin_dir) / name
        if candidate.exists():
            return str(candidate)
    found = shutil.which(name)
    if not found:
        raise MissingBinaryError(
            f"required tool {name!r} not found"
            + (f" in {bin_dir} or PATH" if bin_dir else " on PATH")
        )
    return found


def tool_version(binary: str) -> str:
    """First line of `tool --version`/-version, cached per binary path."""
    if binary in _version_cache:
        return _version_cache[binary]
    version = ""
    for flag in ("--version", "-version"):
        try:
            proc = subprocess.run(
                [binary, flag], capture_output=True, text=True, timeout=15)
        except (OSError, subprocess.TimeoutExpired):
            continue
        text = (proc.stdout or proc.stderr).strip()
        if text:
            version = text.splitlines()[0][:120]
            break
    _version_cache[binary] = version
    return version


def clip_duration_seconds(path: Union[str, Path]) -> float:
    header, frames = y4m.probe_clip(path)
    return frames * header.fps_den / header.fps_num


def execute(
    job: EncodeJob,
    *,
    work_dir: Optional[Union[str, Path]] = None,
    bin_dir: Optional[Union[str, Path]] = None,
    store_path: Optional[Union[str, Path]] = None,
    force: bool = False,
    measure: Optional[Callable[["JobOutcome"], tuple[float, float]]] = None,
    known_keys: Optional[set] = None,
) -> JobOutcome:
    """Run all passes of a job in order and persist the outcome.

    ``measure`` may map a finished outcome to (vmaf, psnr_y); when the
    store path is set, an ok outcome is appended as a MetricRecord.
    ``known_keys`` lets a scheduler preload the store's completed keys
    instead of re-reading the file per job.
    """
    work_dir = Path(work_dir or os.environ.get(ENV_WORK_DIR, "."))
    work_dir.mkdir(parents=True, exist_ok=True)

    record_key = (job.record_clip_id, job.family, job.preset, job.passes,
                  float(job.target_kbps))
    if store_path and not force:
        done = (record_key in known_keys if known_keys is not None
                else store_mod.has_key(store_path, record_key))
        if done:
            log.info("skipping completed job %s", job.slug())
            return JobOutcome(job=job, status="skipped")

    spec = get_spec(job.family)
    binary = resolve_binary(spec.binary, bin_dir)
    commands = build_commands(job, work_dir, bin_dir=None)
    for vec in commands:
        vec[0] = binary

    output_path, passlog = job_paths(job, work_dir)
    duration = clip_duration_seconds(job.input_path)

    hw_lock = _nvenc_lock if job.family == "nvenc-av1" else None
    if hw_lock:
        hw_lock.acquire()
    walls: list[float] = []
    try:
        for vec in commands:
            start = time.monotonic()
            try:
                proc = subprocess.run(vec, capture_output=True, text=True)
            except FileNotFoundError as exc:
                raise MissingBinaryError(f"cannot run {vec[0]!r}: {exc}") from exc
            walls.append(time.monotonic() - start)
            if proc.returncode != 0:
                return JobOutcome(
                    job=job, status="failed", wall_seconds=tuple(walls),
                    output_path=output_path,
                    stderr_tail=(proc.stderr or "")[-_STDERR_TAIL:],
                )
    finally:
        if hw_lock:
            hw_lock.release()

    output_bytes = os.path.getsize(output_path)
    measured_kbps = output_bytes * 8.0 / duration / 1000.0
    reported = container_kbps(output_path, bin_dir)
    if reported and abs(measured_kbps - reported) > 0.02 * reported:
        log.warning(
            "%s: measured %.1f kb/s disagrees with container-reported "
            "%.1f kb/s by more than 2%%", job.slug(), measured_kbps, reported)
    for leftover in glob.glob(passlog + "*"):
        os.remove(leftover)

    outcome = JobOutcome(
        job=job, status="ok", wall_seconds=tuple(walls),
        output_bytes=output_bytes, measured_kbps=measured_kbps,
        output_path=output_path,
    )

    if store_path:
        vmaf = psnr = None
        if measure is not None:
            vmaf, psnr = measure(outcome)
        record = MetricRecord(
            clip_id=job.record_clip_id, family=job.family, preset=job.preset,
            passes=job.passes, target_kbps=float(job.target_kbps),
            measured_kbps=measured_kbps, vmaf=vmaf, psnr_y=psnr,
            encode_seconds=outcome.total_seconds, output_bytes=output_bytes,
            tool_version=tool_version(binary),
        )
        with _store_lock:
            store_mod.append(store_path, record)
            if known_keys is not None:
                known_keys.add(record_key)
    return outcome


def run_plan(
    jobs: Sequence[EncodeJob],
    *,
    workers: Optional[int] = None,
    timing_strict: bool = False,
    **execute_kwargs,
) -> list[JobOutcome]:
    """Execute a plan with bounded parallelism.

    Timing-strict mode serialises everything so wall-clock comparisons
    stay meaningful; otherwise jobs are independent and run on a worker
    pool.
    """
    if timing_strict:
        workers = 1
    workers = workers or os.cpu_count() or 1
    store_path = execute_kwargs.get("store_path")
    if store_path and "known_keys" not in execute_kwargs:
        execute_kwargs["known_keys"] = {
            rec.key() for rec in store_mod.load(store_path)}
    if workers == 1:
        return [execute(job, **execute_kwargs) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(execute, job, **execute_kwargs) for job in jobs]
        return [f.result() for f in futures]


def parse_vmaf_log(text: str) -> tuple[float, float, int]:
    """Pooled mean VMAF, mean PSNR-Y and frame count from a JSON metric log."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MetricParseError(f"metric log is not valid JSON: {exc}") from exc
    pooled = data.get("pooled_metrics")
    if not isinstance(pooled, dict):
        raise MetricParseError("metric log is missing the pooled_metrics section")
    try:
        vmaf = float(pooled["vmaf"]["mean"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MetricParseError("pooled vmaf mean missing") from exc
    psnr = None
    for key in ("psnr_y", "psnr"):
        if key in pooled and isinstance(pooled[key], dict) and "mean" in pooled[key]:
            psnr = float(pooled[key]["mean"])
            break
    if psnr is None:
        raise MetricParseError("pooled psnr_y mean missing")
    n_frames = len(data.get("frames", []))
    return vmaf, psnr, n_frames


def measure_quality(
    source: Union[str, Path],
    encoded: Union[str, Path],
    *,
    bin_dir: Optional[Union[str, Path]] = None,
    expected_frames: Optional[int] = None,
) -> tuple[float, float]:
    """Run the external VMAF tool and return (vmaf_mean, psnr_y_mean).

    Compares the decoded output against the source via an
    ffmpeg-compatible binary with the libvmaf filter, JSON log format.
    """
    binary = resolve_binary("ffmpeg", bin_dir)
    fd, log_path = tempfile.mkstemp(suffix=".json", prefix="rdgauge-vmaf-")
    os.close(fd)
    try:
        filt = (f"libvmaf=log_fmt=json:log_path={log_path}"
                ":feature=name=psnr")
        vec = [binary, "-y", "-i", str(encoded), "-i", str(source),
               "-lavfi", filt, "-f", "null", "-"]
        proc = subprocess.run(vec, capture_output=True, text=True)
        if proc.returncode != 0:
            raise MetricError(
                f"metric tool failed: {(proc.stderr or '')[-_STDERR_TAIL:]}")
        vmaf, psnr, n_frames = parse_vmaf_log(Path(log_path).read_text())
    finally:
        try:
            os.remove(log_path)
        except OSError:
            pass
    if expected_frames is not None and n_frames and n_frames != expected_frames:
        raise MetricError(
            f"frame-count mismatch: source has {expected_frames}, "
            f"metric log has {n_frames}")
    return vmaf, psnr


def container_kbps(path: Union[str, Path],
                   bin_dir: Optional[Union[str, Path]] = None) -> Optional[float]:
    """Container-reported bitrate via ffprobe, None when unavailable."""
    try:
        binary = resolve_binary("ffprobe", bin_dir)
    except MissingBinaryError:
        return None
    vec = [binary, "-v", "quiet", "-print_format", "json", "-show_format",
           str(path)]
    proc = subprocess.run(vec, capture_output=True, text=True)
    if proc.returncode != 0:
        return None
    try:
        return float(json.loads(proc.stdout)["format"]["bit_rate"]) / 1000.0
    except (KeyError, ValueError, json.JSONDecodeError):
        return None
