"""Sparse painted-label ingestion, masked metrics, and the triage ledger.

Annotators paint region interiors in an image-editor layer, one color per
class, leaving everything else black; those layers train models whose
outputs come back as dense label proposals. Triage sorts proposals into
ground-truth-ready / minor-corrections-needed / hard-negative, and the
ledger tracks per-image review state and minutes for efficiency accounting.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, EmptySupportError, ParseError, TransitionError

UNLABELED = 255

# Fixture palette: purple frozen water, green background, per the painting
# scheme the workflow was built around; exact RGB values are a tool choice.
DEFAULT_COLOR_TABLE = {
    "frozen_water": {"id": 1, "rgb": [128, 0, 128]},
    "background": {"id": 0, "rgb": [0, 255, 0]},
}

STATES = (
    "unreviewed",
    "ground-truth-ready",
    "minor-corrections-needed",
    "hard-negative",
    "accepted",
)

LEGAL_TRANSITIONS = {
    "unreviewed": {"ground-truth-ready", "minor-corrections-needed", "hard-negative"},
    "ground-truth-ready": {"accepted"},
    "minor-corrections-needed": {"accepted"},
    "hard-negative": {"unreviewed"},  # after re-annotation
    "accepted": set(),  # terminal
}


@dataclass(frozen=True)
class SparseLabelImage:
    image_id: str
    labels: np.ndarray  # (H, W) uint8, UNLABELED where unpainted
    color_table: dict

    @property
    def labeled_fraction(self) -> float:
        return float(np.mean(self.labels != UNLABELED))


def parse_sparse_labels(image_id: str, rgb_layer: np.ndarray, color_table=None) -> SparseLabelImage:
    """Exact-color match of a painted layer into sparse class labels.

    Pure black is unlabeled. Any other unknown color (anti-aliased brush
    edges, usually) is an annotator error surfaced with pixel coordinates
    rather than silently snapped to the nearest class.
    """
    color_table = color_table or DEFAULT_COLOR_TABLE
    rgb_layer = np.asarray(rgb_layer)
    if rgb_layer.ndim != 3 or rgb_layer.shape[2] != 3:
        raise DomainError(f"expected HxWx3 RGB layer, got {rgb_layer.shape}")
    ids = {}
    for name, spec in color_table.items():
        key = tuple(int(v) for v in spec["rgb"])
        if key in ids:
            raise DomainError(f"color table colors must be distinct; {key} repeats")
        ids[key] = int(spec["id"])
    labels = np.full(rgb_layer.shape[:2], UNLABELED, dtype=np.uint8)
    matched = np.all(rgb_layer == 0, axis=2)  # black = unlabeled
    for (r, g, b), class_id in ids.items():
        hit = (
            (rgb_layer[..., 0] == r) & (rgb_layer[..., 1] == g) & (rgb_layer[..., 2] == b)
        )
        labels[hit] = class_id
        matched |= hit
    if not matched.all():
        bad = np.argwhere(~matched)
        colors = {tuple(int(v) for v in rgb_layer[y, x]) for y, x in bad[:16]}
        y, x = (int(v) for v in bad[0])
        raise ParseError(
            f"{len(bad)} pixel(s) with off-palette colors, e.g. {sorted(colors)} "
            f"first at (row {y}, col {x})"
        )
    return SparseLabelImage(image_id=image_id, labels=labels, color_table=color_table)


def load_label_png(image_id: str, path, color_table=None) -> SparseLabelImage:
    from PIL import Image

    rgb = np.asarray(Image.open(path).convert("RGB"))
    return parse_sparse_labels(image_id, rgb, color_table)


def load_color_table(path) -> dict:
    with open(path) as f:
        table = json.load(f)
    for name, spec in table.items():
        if "id" not in spec or "rgb" not in spec or len(spec["rgb"]) != 3:
            raise ParseError(f"color table entry {name!r} needs id and rgb[3]")
    return table


def masked_metrics(prediction: np.ndarray, sparse: SparseLabelImage) -> dict:
    """Per-class precision/recall/IoU counted over labeled pixels only.

    Classes present in the color table but absent from the painted labels
    come back as None (undefined), never as zero.
    """
    prediction = np.asarray(prediction)
    labels = sparse.labels
    if prediction.shape != labels.shape:
        raise DomainError(
            f"prediction {prediction.shape} does not match labels {labels.shape}"
        )
    support = labels != UNLABELED
    n_support = int(support.sum())
    if n_support == 0:
        raise EmptySupportError("no labeled pixels to evaluate against")
    out = {"labeled_pixels": n_support, "classes": {}}
    table_ids = sorted({int(spec["id"]) for spec in sparse.color_table.values()})
    present = set(int(v) for v in np.unique(labels[support]))
    pred_m = prediction[support]
    lab_m = labels[support]
    for class_id in table_ids:
        if class_id not in present:
            out["classes"][class_id] = {
                "precision": None, "recall": None, "iou": None, "support": 0,
            }
            continue
        p = pred_m == class_id
        t = lab_m == class_id
        tp = int(np.sum(p & t))
        fp = int(np.sum(p & ~t))
        fn = int(np.sum(~p & t))
        out["classes"][class_id] = {
            "precision": tp / (tp + fp) if tp + fp else None,
            "recall": tp / (tp + fn) if tp + fn else None,
            "iou": tp / (tp + fp + fn) if tp + fp + fn else None,
            "support": int(t.sum()),
        }
    return out


# --- triage ledger -----------------------------------------------------------


@dataclass
class LedgerEntry:
    image_id: str
    state: str = "unreviewed"
    minutes: list = field(default_factory=list)
    transitions: list = field(default_factory=list)


class TriageLedger:
    """Append-only review ledger; one JSON line per transition on disk."""

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.entries: dict = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path) as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    self._apply(
                        rec["image_id"], rec["to"], rec.get("minutes"), rec.get("t"),
                        persist=False,
                    )
                except (json.JSONDecodeError, KeyError) as exc:
                    raise ParseError(f"{self.path}:{lineno}: bad ledger line: {exc}") from exc

    def _apply(self, image_id, to_state, minutes, t, persist=True):
        if to_state not in STATES:
            raise TransitionError(f"unknown state {to_state!r}")
        entry = self.entries.setdefault(image_id, LedgerEntry(image_id=image_id))
        if to_state not in LEGAL_TRANSITIONS[entry.state]:
            raise TransitionError(
                f"{image_id}: illegal transition {entry.state} -> {to_state}"
            )
        entry.transitions.append({"from": entry.state, "to": to_state, "t": t})
        entry.state = to_state
        if minutes is not None:
            entry.minutes.append(float(minutes))
        if persist and self.path:
            with open(self.path, "a") as f:
                f.write(
                    json.dumps(
                        {"image_id": image_id, "to": to_state, "minutes": minutes, "t": t},
                        sort_keys=True,
                    )
                    + "\n"
                )

    def transition(self, image_id: str, to_state: str, minutes: float | None = None, t=None):
        self._apply(image_id, to_state, minutes, t if t is not None else time.time())

    def state_of(self, image_id: str) -> str:
        entry = self.entries.get(image_id)
        return entry.state if entry else "unreviewed"


def triage_report(ledger: TriageLedger) -> dict:
    """Fractions per triage outcome and mean minutes per review path.

    Fractions are over images that have left `unreviewed`. Images with no
    recorded minutes are excluded from the means, with a warning count.
    """
    if not ledger.entries:
        raise DomainError("ledger is empty")
    triaged = [e for e in ledger.entries.values() if e.transitions]
    first_triage = {}
    for e in triaged:
        for tr in e.transitions:
            if tr["from"] == "unreviewed":
                first_triage[e.image_id] = tr["to"]
                break
    n = len(first_triage)
    fractions = {}
    for state in ("ground-truth-ready", "minor-corrections-needed", "hard-negative"):
        fractions[state] = (
            sum(1 for s in first_triage.values() if s == state) / n if n else 0.0
        )
    minutes_by_path: dict = {}
    untimed = 0
    for e in triaged:
        path = first_triage.get(e.image_id)
        if path is None:
            continue
        if not e.minutes:
            untimed += 1
            continue
        minutes_by_path.setdefault(path, []).append(sum(e.minutes))
    return {
        "images_triaged": n,
        "fractions": fractions,
        "mean_minutes_per_path": {
            path: float(np.mean(vals)) for path, vals in sorted(minutes_by_path.items())
        },
        "untimed_images": untimed,
        # Reference figures from the field annotation study this workflow
        # models, shipped for report formatting only; human timings are not
        # reproducible measurements.
        "reference_fixture": {
            "ground-truth-ready_fraction": 0.56,
            "minor-corrections-needed_fraction": 0.19,
            "sparse_paint_minutes": 2.02,
            "cleanup_minutes": 1.03,
            "dense_from_scratch_minutes": 8.52,
        },
    }
