"""Digit-image ingestion and the eights-vs-rest bar-ratio classifier.

Each 28x28 grayscale image becomes a planar point cloud (one point per
nonzero pixel).  In weighted mode the ball-growth rate of a point is its
pixel intensity divided by 255; in unweighted mode every rate is 1.  An image
is called an eight when its dimension-1 barcode has a clearly separated
second-longest bar: third-longest / second-longest < 1/2.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .filtration import FiltrationSizeError, build_weighted_rips
from .geometry import PointCloud
from .persistence import boundary_matrix, diagram, reduce

__all__ = [
    "IMAGE_SIDE",
    "LabeledImage",
    "ConfusionMatrix",
    "MnistConfig",
    "MnistResult",
    "load_digits_csv",
    "format_digit_row",
    "image_to_weighted_cloud",
    "image_to_unit_cloud",
    "classify_eight",
    "bar_ratio",
    "evaluate",
]

IMAGE_SIDE = 28
N_PIXELS = IMAGE_SIDE * IMAGE_SIDE


@dataclass(frozen=True)
class LabeledImage:
    """A digit label plus a 28x28 grid of intensities in 0..255."""

    label: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.size != N_PIXELS:
            raise ValueError(f"expected {N_PIXELS} pixels, got {px.size}")
        if px.min(initial=0) < 0 or px.max(initial=0) > 255:
            raise ValueError("pixel intensities must lie in [0, 255]")
        px = px.reshape(IMAGE_SIDE, IMAGE_SIDE).astype(np.uint8)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        if not 0 <= self.label <= 9:
            raise ValueError(f"label must be a digit, got {self.label}")


def load_digits_csv(path, limit: int | None = None) -> list[LabeledImage]:
    """Parse a label + 784 intensity columns CSV; a header row is auto-skipped.

    Errors name the offending row (1-based, header included) and field.
    """
    images = []
    with open(path, encoding="utf-8") as fh:
        for row_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if row_no == 1 and not _is_int(parts[0]):
                continue  # header row
            if len(parts) != N_PIXELS + 1:
                raise ValueError(
                    f"row {row_no}: expected {N_PIXELS + 1} fields, got {len(parts)}"
                )
            try:
                values = np.array(parts, dtype=np.int64)
            except ValueError:
                bad = next(i for i, p in enumerate(parts) if not _is_int(p))
                raise ValueError(
                    f"row {row_no}, field {bad + 1}: {parts[bad]!r} is not an integer"
                ) from None
            if values[1:].min() < 0 or values[1:].max() > 255:
                bad = int(np.argmax((values[1:] < 0) | (values[1:] > 255)))
                raise ValueError(
                    f"row {row_no}, field {bad + 2}: intensity {values[bad + 1]} "
                    "outside [0, 255]"
                )
            if not 0 <= values[0] <= 9:
                raise ValueError(f"row {row_no}, field 1: label {values[0]} not a digit")
            images.append(LabeledImage(int(values[0]), values[1:]))
            if limit is not None and len(images) >= limit:
                break
    return images


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def format_digit_row(img: LabeledImage) -> str:
    """Serialize an image back to its CSV row form."""
    return ",".join([str(img.label)] + [str(int(v)) for v in img.pixels.ravel()])


def image_to_weighted_cloud(img: LabeledImage) -> PointCloud:
    """One point (row, col) per nonzero pixel, weight = intensity / 255."""
    rows, cols = np.nonzero(img.pixels)
    pts = np.column_stack([rows, cols]).astype(float)
    weights = img.pixels[rows, cols].astype(float) / 255.0
    return PointCloud(pts.reshape(-1, 2), weights)


def image_to_unit_cloud(img: LabeledImage) -> PointCloud:
    """Same support as the weighted cloud, but every weight is 1."""
    rows, cols = np.nonzero(img.pixels)
    pts = np.column_stack([rows, cols]).astype(float)
    return PointCloud(pts.reshape(-1, 2), np.ones(len(rows)))


def bar_ratio(bars) -> tuple[float, float, float]:
    """(second-longest, third-longest, third/second) over positive-length bars.

    Missing bars count as length 0; the ratio is NaN when there is no second
    bar.
    """
    lengths = sorted(
        (d - b for b, d in bars if math.isfinite(d) and d > b), reverse=True
    )
    l2 = lengths[1] if len(lengths) >= 2 else 0.0
    l3 = lengths[2] if len(lengths) >= 3 else 0.0
    ratio = l3 / l2 if l2 > 0 else math.nan
    return l2, l3, ratio


def classify_eight(bars) -> bool:
    """True when the dim-1 barcode shows two dominant bars (ratio < 1/2)."""
    l2, _, ratio = bar_ratio(bars)
    return l2 > 0 and ratio < 0.5


@dataclass(frozen=True)
class MnistConfig:
    """Pipeline parameters; max_dim must stay >= 2 so 1-cycles can die."""

    max_dim: int = 2
    t_max: float = 10.0
    simplex_cap: int = 10_000_000
    threads: int = 1

    def __post_init__(self):
        if self.max_dim < 2:
            raise ValueError("max_dim must be at least 2 for the bar-ratio rule")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = reference (not-8, is-8), columns = predicted.

    The rate metrics follow the orientation of the reference tables, where
    the majority class (not-8) plays the positive role: sensitivity is the
    not-8 recall and specificity is the is-8 recall.
    """

    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def accuracy(self) -> float:
        return _safe_div(self.tp + self.tn, self.total)

    @property
    def sensitivity(self) -> float:
        return _safe_div(self.tn, self.tn + self.fp)

    @property
    def specificity(self) -> float:
        return _safe_div(self.tp, self.tp + self.fn)

    @property
    def ppv(self) -> float:
        return _safe_div(self.tn, self.tn + self.fn)

    @property
    def npv(self) -> float:
        return _safe_div(self.tp, self.tp + self.fp)

    @property
    def prevalence(self) -> float:
        return _safe_div(self.tn + self.fp, self.total)

    @property
    def balanced_accuracy(self) -> float:
        return 0.5 * (self.sensitivity + self.specificity)

    def metric_rows(self) -> list[tuple[str, float]]:
        return [
            ("Accuracy", self.accuracy),
            ("Sensitivity", self.sensitivity),
            ("Specificity", self.specificity),
            ("Pos. Pred. Value", self.ppv),
            ("Neg. Pred. Value", self.npv),
            ("Prevalence", self.prevalence),
            ("Balanced Accuracy", self.balanced_accuracy),
        ]

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tn + other.tn,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tp + other.tp,
        )


def _safe_div(num, den) -> float:
    return num / den if den else math.nan


@dataclass(frozen=True)
class PredictionRow:
    index: int
    label: int
    l2: float
    l3: float
    ratio: float
    predicted: bool


@dataclass(frozen=True)
class ImageFailure:
    index: int
    label: int
    reason: str


@dataclass
class MnistResult:
    mode: str
    confusion: ConfusionMatrix
    predictions: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def report_text(self) -> str:
        cm = self.confusion
        lines = [
            f"mode: {self.mode}",
            f"images evaluated: {cm.total} (failures excluded: {len(self.failures)})",
            "",
            f"{'':>10} {'pred not-8':>12} {'pred 8':>12}",
            f"{'not-8':>10} {cm.tn:>12} {cm.fp:>12}",
            f"{'is-8':>10} {cm.fn:>12} {cm.tp:>12}",
            "",
        ]
        for name, value in cm.metric_rows():
            lines.append(f"{name:<18} {value:.4f}")
        if self.failures:
            lines.append("")
            for f in self.failures:
                lines.append(f"failed image {f.index} (label {f.label}): {f.reason}")
        return "\n".join(lines)

    def report_tsv(self) -> str:
        cm = self.confusion
        rows = [
            "key\tvalue",
            f"mode\t{self.mode}",
            f"tn\t{cm.tn}",
            f"fp\t{cm.fp}",
            f"fn\t{cm.fn}",
            f"tp\t{cm.tp}",
            f"failures\t{len(self.failures)}",
        ]
        for name, value in cm.metric_rows():
            rows.append(f"{name}\t{value:.6f}")
        return "\n".join(rows)

    def predictions_tsv(self) -> str:
        rows = ["index\tlabel\tL2\tL3\tratio\tpredicted"]
        for p in self.predictions:
            rows.append(
                f"{p.index}\t{p.label}\t{p.l2:.9g}\t{p.l3:.9g}\t{p.ratio:.9g}"
                f"\t{int(p.predicted)}"
            )
        return "\n".join(rows)


def _dim1_bars(cloud: PointCloud, cfg: MnistConfig):
    """Finite dim-1 bars of the weighted Rips filtration of ``cloud``."""
    if len(cloud) == 0:
        return []
    filt = build_weighted_rips(
        cloud, max_dim=cfg.max_dim, t_max=cfg.t_max, cap=cfg.simplex_cap
    )
    dgm = diagram(filt, reduce(boundary_matrix(filt)))
    bars = dgm.in_dim(1)
    if bars.size and not np.all(np.isfinite(bars[:, 1])):
        raise RuntimeError(
            f"dim-1 class never dies below t_max={cfg.t_max}; raise t_max"
        )
    return [(float(b), float(d)) for b, d in bars]


def _evaluate_one(args):
    index, label, pixels, mode, cfg = args
    img = LabeledImage(label, pixels)
    cloud = (
        image_to_weighted_cloud(img) if mode == "weighted" else image_to_unit_cloud(img)
    )
    try:
        bars = _dim1_bars(cloud, cfg)
    except (FiltrationSizeError, RuntimeError) as exc:
        return index, label, None, str(exc)
    l2, l3, ratio = bar_ratio(bars)
    predicted = l2 > 0 and ratio < 0.5
    return index, label, (l2, l3, ratio, predicted), None


def evaluate(images, mode: str, cfg: MnistConfig | None = None) -> MnistResult:
    """Classify every image and aggregate a confusion matrix.

    ``mode`` is "weighted" or "unweighted".  Per-image failures (resource cap,
    unbounded bars) are collected and excluded from the matrix rather than
    aborting the run.  Results are deterministic and independent of
    ``cfg.threads``.
    """
    if mode not in ("weighted", "unweighted"):
        raise ValueError(f"mode must be 'weighted' or 'unweighted', got {mode!r}")
    cfg = cfg or MnistConfig()
    if not images:
        raise ValueError("dataset must be nonempty")
    payloads = [
        (i, img.label, np.asarray(img.pixels), mode, cfg)
        for i, img in enumerate(images)
    ]
    if cfg.threads > 1:
        # warm the jitted kernels before forking so workers inherit them
        _evaluate_one(payloads[0])
        with multiprocessing.Pool(cfg.threads) as pool:
            rows = list(pool.imap(_evaluate_one, payloads, chunksize=8))
    else:
        rows = [_evaluate_one(p) for p in payloads]
    tn = fp = fn = tp = 0
    predictions, failures = [], []
    for index, label, outcome, error in rows:
        if error is not None:
            failures.append(ImageFailure(index, label, error))
            continue
        l2, l3, ratio, predicted = outcome
        predictions.append(PredictionRow(index, label, l2, l3, ratio, predicted))
        actual = label == 8
        if actual and predicted:
            tp += 1
        elif actual:
            fn += 1
        elif predicted:
            fp += 1
        else:
            tn += 1
    return MnistResult(
        mode=mode,
        confusion=ConfusionMatrix(tn=tn, fp=fp, fn=fn, tp=tp),
        predictions=predictions,
        failures=failures,
    )
