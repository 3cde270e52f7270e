"""Clock discipline chain: 1PPS events, affine clock models, timestamp checks.

The real system ties camera, payload computer, and INS clocks to GPS time
through PTP seeded by the INS 1PPS. Here that chain is represented by its
effect: an affine clock model (offset + drift) disciplined from PPS event
pairs, used by the simulator to stamp camera exposures.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError, ParseError

# re-exported here because offset experiments are a timebase concern
from .pose import apply_time_offset  # noqa: F401


@dataclass(frozen=True)
class ClockModel:
    """Affine local-clock model: local = gps + offset + drift * (gps - ref_epoch).

    ref_epoch_s anchors the drift term so the offset stays well conditioned
    over mission-length spans; offset_s is therefore (clock - GPS) at the
    reference epoch.
    """

    offset_s: float
    drift_ppm: float
    jitter_sigma_s: float = 0.0
    ref_epoch_s: float = 0.0

    def __post_init__(self):
        if abs(self.drift_ppm) >= 100.0:
            raise DomainError(f"drift {self.drift_ppm} ppm outside +/-100 ppm")
        if self.jitter_sigma_s < 0:
            raise DomainError("jitter sigma must be non-negative")

    def to_local(self, gps_s, rng=None):
        """Local clock reading(s) for true GPS time(s); jitter applied if rng given."""
        gps_s = np.asarray(gps_s, dtype=float)
        local = gps_s + self.offset_s + self.drift_ppm * 1e-6 * (gps_s - self.ref_epoch_s)
        if rng is not None and self.jitter_sigma_s > 0:
            local = local + rng.normal(0.0, self.jitter_sigma_s, size=local.shape)
        return local

    def to_gps(self, local_s):
        """Invert the affine map (jitter-free)."""
        local_s = np.asarray(local_s, dtype=float)
        scale = 1.0 + self.drift_ppm * 1e-6
        return (local_s - self.offset_s + self.drift_ppm * 1e-6 * self.ref_epoch_s) / scale


@dataclass(frozen=True)
class PpsEvent:
    """One 1PPS edge: the integer GPS second it marks, and the local-clock read."""

    true_gps_s: int
    observed_local_s: float

    def __post_init__(self):
        if self.true_gps_s != int(self.true_gps_s):
            raise DomainError("PPS true time must be a whole GPS second")


@dataclass(frozen=True)
class DisciplineReport:
    model: ClockModel
    residual_rms_s: float
    n_events: int


def discipline_clock(events) -> DisciplineReport:
    """Least-squares affine fit mapping GPS seconds to local-clock reads.

    Needs at least two events. The fit is centered on the first event time so
    noiseless synthetic data is recovered to machine precision.
    """
    events = list(events)
    if len(events) < 2:
        raise InsufficientDataError(
            f"clock discipline needs >= 2 PPS events, got {len(events)}"
        )
    gps = np.array([e.true_gps_s for e in events], dtype=float)
    local = np.array([e.observed_local_s for e in events], dtype=float)
    ref = gps[0]
    t = gps - ref
    resid_vec = local - gps
    # local - gps = offset + drift * t: ordinary least squares in two params.
    a = np.stack([np.ones_like(t), t], axis=-1)
    coef, *_ = np.linalg.lstsq(a, resid_vec, rcond=None)
    offset, drift = float(coef[0]), float(coef[1])
    fitted = offset + drift * t
    rms = float(np.sqrt(np.mean((resid_vec - fitted) ** 2)))
    model = ClockModel(
        offset_s=offset, drift_ppm=drift * 1e6, jitter_sigma_s=0.0, ref_epoch_s=float(ref)
    )
    return DisciplineReport(model=model, residual_rms_s=rms, n_events=len(events))


@dataclass(frozen=True)
class WholeSecondReport:
    deviations_s: tuple
    max_deviation_s: float
    tol_s: float
    passed: bool


def validate_whole_second(timestamps, tol_s: float) -> WholeSecondReport:
    """Check camera timestamps for consistency with integer GPS seconds.

    Used to validate PPS-triggered capture: every timestamp should sit within
    tol_s of a whole second.
    """
    ts = np.asarray(list(timestamps), dtype=float)
    if ts.size == 0:
        raise InsufficientDataError("no timestamps to validate")
    dev = np.abs(ts - np.round(ts))
    max_dev = float(dev.max())
    return WholeSecondReport(
        deviations_s=tuple(float(d) for d in dev),
        max_deviation_s=max_dev,
        tol_s=float(tol_s),
        passed=bool(max_dev <= tol_s),
    )


def generate_pps_events(model: ClockModel, start_gps_s: int, count: int, rng=None):
    """Simulate PPS edges as seen by an undisciplined clock following `model`."""
    seconds = np.arange(start_gps_s, start_gps_s + count, dtype=int)
    local = model.to_local(seconds.astype(float), rng=rng)
    return [PpsEvent(int(s), float(l)) for s, l in zip(seconds, local)]


def write_pps_csv(path, events) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["true_gps_s", "observed_local_s"])
        for e in events:
            writer.writerow([e.true_gps_s, f"{e.observed_local_s:.9f}"])


def read_pps_csv(path):
    events = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["true_gps_s", "observed_local_s"]:
            raise ParseError(f"{path}: expected header true_gps_s, observed_local_s")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                events.append(PpsEvent(int(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: bad PPS record: {exc}") from exc
    return events
