"""Inter-annotator agreement analytics.

Two annotation layers over the same trajectory are compared by matching
marks whose positions lie within a Haversine distance threshold tau.
Matching fills a 2x2 contingency table:

* ``a``  marks matched between A and B,
* ``b``  marks only A placed,
* ``c``  marks only B placed,
* ``d``  points neither annotated, ``d = |T| - (a + b + c)``.

Cohen's Kappa and Overlap are computed from the table; phase reports
average both over every annotator pair of a phase.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .model import AnnotationLayer, Trajectory, ValidationError

EARTH_RADIUS_M = 6_371_000.0

#: Default distance thresholds (meters) for agreement-vs-tau sweeps.
DEFAULT_TAU_SWEEP = (10.0, 25.0, 50.0, 100.0, 200.0)

PHASES = ("expert", "strict", "easy")


class AgreementError(ValueError):
    """Raised when a metric is undefined for the given counts."""


@dataclass(frozen=True)
class ContingencyCounts:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            if getattr(self, name) < 0:
                raise ValidationError(f"count {name} is negative")

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


@dataclass(frozen=True)
class AgreementConfig:
    """Matching parameters: tau in meters, configurable earth radius.

    ``require_type_overlap`` additionally demands a shared segment type
    before two marks may match; position-only matching is the default.
    """

    tau: float
    earth_radius: float = EARTH_RADIUS_M
    require_type_overlap: bool = False

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValidationError(f"tau must be >= 0, got {self.tau}")
        if self.earth_radius <= 0:
            raise ValidationError(f"earth radius must be positive, got {self.earth_radius}")


def haversine(
    lat1: float, lng1: float, lat2: float, lng2: float, radius: float = EARTH_RADIUS_M
) -> float:
    """Great-circle distance in meters between two lat/lng points."""
    for lat in (lat1, lat2):
        if not (-90.0 <= lat <= 90.0):
            raise ValidationError(f"latitude {lat!r} outside [-90, 90]")
    for lng in (lng1, lng2):
        if not (-180.0 <= lng <= 180.0):
            raise ValidationError(f"longitude {lng!r} outside [-180, 180]")
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lng2) - math.radians(lng1)
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * radius * math.asin(min(1.0, math.sqrt(h)))


def match_annotations(
    layer_a: AnnotationLayer,
    layer_b: AnnotationLayer,
    trajectory: Trajectory,
    config: AgreementConfig,
) -> ContingencyCounts:
    """Greedy one-to-one matching of two layers into contingency counts.

    Candidate pairs closer than tau are consumed in ascending distance
    order (ties broken by mark positions), each mark matching at most once.
    Greedy keeps ``a <= min(|A|, |B|)``, which the table interpretation
    requires.
    """
    positions = {p.time_step: (p.latitude, p.longitude) for p in trajectory.points}

    def locate(layer: AnnotationLayer) -> list[tuple[float, float]]:
        out = []
        for m in layer.marks:
            if m.time_step not in positions:
                raise ValidationError(
                    f"mark at step {m.time_step} of {layer.author!r} references no point of "
                    f"{trajectory.trip_id!r}"
                )
            out.append(positions[m.time_step])
        return out

    points_a = locate(layer_a)
    points_b = locate(layer_b)

    candidates: list[tuple[float, int, int]] = []
    for i, (lat_a, lng_a) in enumerate(points_a):
        for j, (lat_b, lng_b) in enumerate(points_b):
            if config.require_type_overlap and not (
                layer_a.marks[i].segment_types & layer_b.marks[j].segment_types
            ):
                continue
            dist = haversine(lat_a, lng_a, lat_b, lng_b, config.earth_radius)
            if dist < config.tau:
                candidates.append((dist, i, j))
    candidates.sort()

    used_a: set[int] = set()
    used_b: set[int] = set()
    a = 0
    for _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        a += 1
    b = len(points_a) - a
    c = len(points_b) - a
    d = trajectory.n - (a + b + c)
    if d < 0:
        raise ValidationError(
            f"more marks than points on {trajectory.trip_id!r}: |T|={trajectory.n}, "
            f"a+b+c={a + b + c}"
        )
    return ContingencyCounts(a, b, c, d)


def cohens_kappa(counts: ContingencyCounts) -> float:
    """Chance-corrected agreement over the contingency table.

    kappa = (p_o - p_e) / (1 - p_e) with p_o = (a+d)/n and
    p_e = (a+b)(a+c)/n^2 + (c+d)(b+d)/n^2.  Perfect observed agreement
    (p_o = 1) returns exactly 1 regardless of the marginals.
    """
    a, b, c, d = counts.a, counts.b, counts.c, counts.d
    n = counts.total
    if n == 0:
        raise AgreementError("all-zero counts: kappa undefined")
    p_o = (a + d) / n
    if p_o == 1.0:
        return 1.0
    p_e = ((a + b) * (a + c) + (c + d) * (b + d)) / (n * n)
    if p_e == 1.0:
        raise AgreementError("degenerate marginals: p_e = 1 with imperfect agreement")
    return (p_o - p_e) / (1.0 - p_e)


def overlap(counts: ContingencyCounts) -> float:
    """Matched fraction of all placed marks: a / (a + b + c)."""
    placed = counts.a + counts.b + counts.c
    if placed == 0:
        raise AgreementError("no annotations to compare: overlap undefined")
    return counts.a / placed


@dataclass(frozen=True)
class PairRecord:
    trip_id: str
    author_a: str
    author_b: str
    counts: ContingencyCounts
    kappa: float
    overlap: float


@dataclass(frozen=True)
class AgreementReport:
    phase: str
    tau: float
    pairs: tuple[PairRecord, ...]
    warnings: tuple[str, ...] = ()

    @property
    def avg_kappa(self) -> float:
        if not self.pairs:
            return float("nan")
        return sum(p.kappa for p in self.pairs) / len(self.pairs)

    @property
    def avg_overlap(self) -> float:
        if not self.pairs:
            return float("nan")
        return sum(p.overlap for p in self.pairs) / len(self.pairs)


@dataclass(frozen=True)
class AgreementDataset:
    """Layers of an annotated corpus, arranged for agreement analysis.

    ``annotator_layers`` maps trip -> the per-annotator layers from the
    expert phase; ``finalized`` maps (trip, phase) -> the aggregator's
    merged layer for the strict/easy phases.
    """

    trajectories: Mapping[str, Trajectory]
    annotator_layers: Mapping[str, Sequence[AnnotationLayer]]
    finalized: Mapping[tuple[str, str], AnnotationLayer] = field(default_factory=dict)


def _pairs_for_phase(
    dataset: AgreementDataset, phase: str, trip_id: str
) -> tuple[list[tuple[AnnotationLayer, AnnotationLayer]], str | None]:
    layers = sorted(dataset.annotator_layers.get(trip_id, ()), key=lambda l: l.author)
    if phase == "expert":
        if len(layers) < 2:
            return [], f"{trip_id}: fewer than two annotator layers, skipped"
        return [(la, lb) for i, la in enumerate(layers) for lb in layers[i + 1 :]], None
    finalized = dataset.finalized.get((trip_id, phase))
    if finalized is None:
        return [], f"{trip_id}: no finalized {phase} layer, skipped"
    if not layers:
        return [], f"{trip_id}: no annotator layers, skipped"
    return [(finalized, lb) for lb in layers], None


def phase_agreement(
    dataset: AgreementDataset,
    phase: str,
    tau: float,
    *,
    earth_radius: float = EARTH_RADIUS_M,
) -> AgreementReport:
    """Per-pair kappa/overlap for one phase at one tau, plus averages.

    The expert phase pairs every two annotators of a trip; the strict and
    easy phases pair that phase's finalized layer with each annotator.
    Trips lacking the required layers are skipped with a warning entry, as
    are pairs where neither side placed any mark.
    """
    if phase not in PHASES:
        raise ValidationError(f"unknown phase {phase!r}; expected one of {PHASES}")
    config = AgreementConfig(tau=tau, earth_radius=earth_radius)
    records: list[PairRecord] = []
    warnings: list[str] = []
    for trip_id in sorted(dataset.trajectories):
        trajectory = dataset.trajectories[trip_id]
        pairs, warning = _pairs_for_phase(dataset, phase, trip_id)
        if warning:
            warnings.append(warning)
            continue
        for la, lb in pairs:
            counts = match_annotations(la, lb, trajectory, config)
            if counts.a + counts.b + counts.c == 0:
                warnings.append(
                    f"{trip_id}: neither {la.author!r} nor {lb.author!r} placed marks, skipped"
                )
                continue
            records.append(
                PairRecord(trip_id, la.author, lb.author, counts, cohens_kappa(counts), overlap(counts))
            )
    return AgreementReport(phase, tau, tuple(records), tuple(warnings))


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    avg_kappa: float
    avg_overlap: float


def tau_sweep(
    dataset: AgreementDataset,
    phase: str,
    taus: Sequence[float],
    *,
    earth_radius: float = EARTH_RADIUS_M,
) -> list[tuple[SweepPoint, AgreementReport]]:
    """One agreement report per tau, ascending."""
    if not taus:
        raise ValidationError("empty tau list")
    if list(taus) != sorted(taus):
        raise ValidationError("tau values must be sorted ascending")
    out = []
    for tau in taus:
        report = phase_agreement(dataset, phase, tau, earth_radius=earth_radius)
        out.append((SweepPoint(tau, report.avg_kappa, report.avg_overlap), report))
    return out


REPORT_COLUMNS = (
    "tau",
    "phase",
    "trip_id",
    "author_a",
    "author_b",
    "a",
    "b",
    "c",
    "d",
    "kappa",
    "overlap",
)


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def report_csv(reports: Iterable[AgreementReport]) -> str:
    """Render reports as CSV: one row per pair plus a `*` summary per tau."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for report in reports:
        for p in report.pairs:
            writer.writerow(
                [
                    f"{report.tau:g}",
                    report.phase,
                    p.trip_id,
                    p.author_a,
                    p.author_b,
                    p.counts.a,
                    p.counts.b,
                    p.counts.c,
                    p.counts.d,
                    _fmt(p.kappa),
                    _fmt(p.overlap),
                ]
            )
        writer.writerow(
            [
                f"{report.tau:g}",
                report.phase,
                "*",
                "*",
                "*",
                "",
                "",
                "",
                "",
                _fmt(report.avg_kappa) if report.pairs else "",
                _fmt(report.avg_overlap) if report.pairs else "",
            ]
        )
    return out.getvalue()
