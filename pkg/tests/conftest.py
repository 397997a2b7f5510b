import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from rdgauge.store import MetricRecord


def vmaf_model(rate_kbps: float, scale: float) -> float:
    """Monotone saturating quality model used to fabricate plausible data."""
    return 100.0 * (1.0 - math.exp(-rate_kbps / scale))


def make_records(
    clip_ids,
    family,
    preset,
    passes,
    ladder,
    *,
    rate_factor=1.0,
    efficiency=1.0,
    scale_base=2500.0,
    scale_step=400.0,
    enc_s=120.0,
    rate_jitter=0.0,
    seed=0,
):
    """One record per (clip, rung) with a per-clip quality scale.

    ``efficiency`` > 1 models a codec that reaches the quality of a
    proportionally higher bitrate, i.e. genuine bitrate savings.
    """
    rng = np.random.default_rng(seed)
    records = []
    for i, clip in enumerate(clip_ids):
        scale = scale_base + scale_step * i
        for tbr in ladder:
            measured = tbr * rate_factor
            if rate_jitter:
                measured *= 1.0 + rng.uniform(-rate_jitter, rate_jitter)
            records.append(MetricRecord(
                clip_id=clip, family=family, preset=preset, passes=passes,
                target_kbps=float(tbr), measured_kbps=float(measured),
                vmaf=vmaf_model(measured * efficiency, scale),
                psnr_y=30.0 + 5.0 * math.log10(measured / 100.0),
                encode_seconds=enc_s, output_bytes=int(measured * 125),
                tool_version="synthetic",
            ))
    return records


@pytest.fixture
def tmp_store(tmp_path):
    return tmp_path / "records.jsonl"
