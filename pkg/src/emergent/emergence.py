"""Emergence time series: construction, burst detection, similarity, clustering.

A series counts the documents mentioning an entity per day, from its first
mention to the day it enters the knowledge base. Bursts are runs where the
trailing moving average exceeds a multiple of its standard deviation; series
similarity is the Jaccard overlap of burst regions on the relative time
axis; clustering is Ward-linkage HAC on the derived distance matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

MIN_MENTION_DOCS = 5


@dataclass(frozen=True)
class EmergenceSeries:
    entity_id: str
    first_day: int
    creation_day: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.creation_day < self.first_day:
            raise ValueError("creation_day before first_day")
        if len(self.counts) != self.creation_day - self.first_day + 1:
            raise ValueError("counts length must cover first..creation days")
        if not self.counts or self.counts[0] < 1:
            raise ValueError("series must start on a mention day")


@dataclass(frozen=True)
class BurstConfig:
    window: int = 7
    cutoff_multiplier: float = 1.5

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.cutoff_multiplier <= 0:
            raise ValueError("cutoff_multiplier must be positive")


@dataclass(frozen=True)
class Burst:
    start: int
    end: int  # [start, end) on the series day axis
    duration: float  # width / series length, in [0, 1]
    value: float  # mean moving-average height over the run, relative to the MA peak


@dataclass(frozen=True)
class Dendrogram:
    """Merge quadruples (a, b, height, size) in merge order.

    Leaves are 0..n-1; merge t creates cluster id n+t.
    """

    n_leaves: int
    merges: tuple[tuple[int, int, float, int], ...]


@dataclass(frozen=True)
class SeriesStats:
    entity_id: str
    duration: int
    volume: int
    velocity: float
    n_bursts: int
    mean_burst_duration: float
    mean_burst_value: float


def build_series(mentions: Iterable[tuple[str, str, int]],
                 creation_days: Mapping[str, int | None],
                 stream_end: int) -> tuple[list[EmergenceSeries], list[tuple[str, str]]]:
    """Per-entity daily distinct-document mention counts.

    ``mentions`` yields (entity_id, doc_id, day). Entities are excluded when
    their creation day is unknown or falls after ``stream_end``, and pruned
    when fewer than 5 distinct documents mention them before creation.
    Exclusions are returned as (entity_id, reason), never silently dropped.
    """
    per_entity: dict[str, dict[int, set[str]]] = {}
    for entity_id, doc_id, day in mentions:
        per_entity.setdefault(entity_id, {}).setdefault(day, set()).add(doc_id)

    series: list[EmergenceSeries] = []
    excluded: list[tuple[str, str]] = []
    for entity_id in sorted(per_entity):
        creation = creation_days.get(entity_id)
        if creation is None:
            excluded.append((entity_id, "no creation date"))
            continue
        if creation > stream_end:
            excluded.append((entity_id, "created after stream end"))
            continue
        days = {d: docs for d, docs in per_entity[entity_id].items() if d <= creation}
        if not days:
            excluded.append((entity_id, "no mentions before creation"))
            continue
        volume = len(set().union(*days.values()))
        if volume < MIN_MENTION_DOCS:
            excluded.append((entity_id, f"mentioned in fewer than {MIN_MENTION_DOCS} documents"))
            continue
        first = min(days)
        counts = [0] * (creation - first + 1)
        for d, docs in days.items():
            counts[d - first] = len(docs)
        series.append(EmergenceSeries(entity_id, first, creation, tuple(counts)))
    return series, excluded


def prepare(series: EmergenceSeries | Sequence[float], target_len: int) -> np.ndarray:
    """Standardize to zero mean / unit variance, then linearly interpolate
    to ``target_len`` points. Constant series map to all zeros."""
    if target_len < 2:
        raise ValueError("target_len must be >= 2")
    counts = series.counts if isinstance(series, EmergenceSeries) else series
    values = np.asarray(counts, dtype=np.float64)
    if values.size < 2:
        raise ValueError("series must have at least 2 points")
    std = values.std()
    if std == 0:
        return np.zeros(target_len)
    z = (values - values.mean()) / std
    grid = np.linspace(0, values.size - 1, target_len)
    return np.interp(grid, np.arange(values.size), z)


def moving_average(counts: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean over the preceding ``window`` days (head uses the
    available prefix only; no future leakage)."""
    values = np.asarray(counts, dtype=np.float64)
    sums = np.cumsum(values)
    out = np.empty_like(values)
    for t in range(values.size):
        lo = max(0, t - window + 1)
        out[t] = (sums[t] - (sums[lo - 1] if lo > 0 else 0.0)) / (t - lo + 1)
    return out


def detect_bursts(counts: Sequence[float], cfg: BurstConfig = BurstConfig()) -> list[Burst]:
    """Maximal runs where the moving average exceeds multiplier * sigma(MA).

    A flat moving average (sigma 0) yields no bursts.
    """
    values = np.asarray(counts, dtype=np.float64)
    if values.size == 0:
        return []
    ma = moving_average(values, cfg.window)
    sigma = float(ma.std())
    if sigma == 0:
        return []
    cutoff = cfg.cutoff_multiplier * sigma
    above = ma > cutoff
    peak = float(ma.max())
    bursts: list[Burst] = []
    i = 0
    n = values.size
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j < n and above[j]:
            j += 1
        bursts.append(Burst(i, j, (j - i) / n, float(ma[i:j].mean()) / peak))
        i = j
    return bursts


def _relative_intervals(bursts: Sequence[Burst], axis_len: int) -> list[tuple[float, float]]:
    return [(b.start / axis_len, b.end / axis_len) for b in bursts]


def _overlap(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> float:
    total = 0.0
    for s1, e1 in a:
        for s2, e2 in b:
            total += max(0.0, min(e1, e2) - max(s1, s2))
    return total


def bsim(a: Sequence[Burst], b: Sequence[Burst], len_a: int, len_b: int) -> float:
    """Burst similarity: Jaccard overlap of the two burst regions mapped to
    the relative axis [0, 1]. Two burst-free series are identical (1);
    a burst-free series shares nothing with a bursting one (0)."""
    ia = _relative_intervals(a, len_a)
    ib = _relative_intervals(b, len_b)
    mass_a = sum(e - s for s, e in ia)
    mass_b = sum(e - s for s, e in ib)
    if mass_a == 0 and mass_b == 0:
        return 1.0
    inter = _overlap(ia, ib)
    union = mass_a + mass_b - inter
    return inter / union


def similarity_matrix(series_set: Sequence[EmergenceSeries],
                      cfg: BurstConfig = BurstConfig()) -> np.ndarray:
    bursts = [detect_bursts(s.counts, cfg) for s in series_set]
    lengths = [len(s.counts) for s in series_set]
    n = len(series_set)
    sm = np.empty((n, n))
    for i in range(n):
        sm[i, i] = 1.0
        for j in range(i + 1, n):
            sm[i, j] = sm[j, i] = bsim(bursts[i], bursts[j], lengths[i], lengths[j])
    return sm


def distance_matrix(sm: np.ndarray) -> np.ndarray:
    """Row-wise L2 normalization, symmetrization by averaging with the
    transpose, then distance = 1 - similarity clamped to [0, 1]."""
    norms = np.linalg.norm(sm, axis=1, keepdims=True)
    normalized = sm / norms
    sym = (normalized + normalized.T) / 2.0
    return np.clip(1.0 - sym, 0.0, 1.0)


def ward_linkage(dist: np.ndarray) -> list[tuple[int, int, float, int]]:
    """Agglomerative Ward merges via the Lance-Williams update.

    At every step the closest active pair merges (ties: smallest ids);
    distances from the merged cluster to the rest follow
    sqrt(((si+sk) d_ik^2 + (sj+sk) d_jk^2 - sk d_ij^2) / (si+sj+sk)).
    """
    n = dist.shape[0]
    m = 2 * n - 1
    d = np.full((m, m), np.inf)
    d[:n, :n] = dist
    np.fill_diagonal(d, np.inf)
    sizes = np.zeros(m)
    sizes[:n] = 1.0
    active = np.zeros(m, dtype=bool)
    active[:n] = True
    merges: list[tuple[int, int, float, int]] = []
    for t in range(n - 1):
        limit = n + t
        # row-major argmin: equal distances resolve to the smallest (a, b)
        flat = int(np.argmin(d[:limit, :limit]))
        a, b = divmod(flat, limit)
        height = float(d[a, b])
        sa, sb = sizes[a], sizes[b]
        rest = np.flatnonzero(active[:limit])
        rest = rest[(rest != a) & (rest != b)]
        if rest.size:
            sk = sizes[rest]
            squared = ((sa + sk) * d[a, rest] ** 2 + (sb + sk) * d[b, rest] ** 2
                       - sk * height * height) / (sa + sb + sk)
            dk = np.sqrt(np.maximum(squared, 0.0))
            d[limit, rest] = dk
            d[rest, limit] = dk
        sizes[limit] = sa + sb
        active[a] = active[b] = False
        active[limit] = True
        d[a, :] = np.inf
        d[:, a] = np.inf
        d[b, :] = np.inf
        d[:, b] = np.inf
        merges.append((a, b, height, int(sa + sb)))
    return merges


def cut_dendrogram(dendrogram: Dendrogram, k: int) -> list[int]:
    """Cluster labels after undoing the last k-1 merges.

    Labels are 0..k-1 in order of each cluster's first member.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError("k must be in [1, n]")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for t, (a, b, _, _) in enumerate(dendrogram.merges[:n - k]):
        members[n + t] = members.pop(a) + members.pop(b)
    groups = sorted(members.values(), key=min)
    labels = [0] * n
    for label, group in enumerate(groups):
        for leaf in group:
            labels[leaf] = label
    return labels


def cluster(series_set: Sequence[EmergenceSeries], cfg: BurstConfig, k: int,
            ) -> tuple[Dendrogram, list[int]]:
    """Ward HAC over burst-similarity distances; returns the full dendrogram
    and the assignment for a cut at k clusters."""
    if len(series_set) < 2:
        raise ValueError("need at least 2 series to cluster")
    dm = distance_matrix(similarity_matrix(series_set, cfg))
    dendrogram = Dendrogram(len(series_set), tuple(ward_linkage(dm)))
    return dendrogram, cut_dendrogram(dendrogram, k)


def signature(members: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard deviation of equal-length prepared vectors."""
    if len(members) == 0:
        raise ValueError("empty group")
    stack = np.vstack(members)
    return stack.mean(axis=0), stack.std(axis=0)


def descriptive_stats(series: EmergenceSeries, bursts: Sequence[Burst]) -> SeriesStats:
    duration = series.creation_day - series.first_day
    volume = int(sum(series.counts))
    velocity = float(volume) if duration == 0 else volume / duration
    n_bursts = len(bursts)
    return SeriesStats(
        entity_id=series.entity_id,
        duration=duration,
        volume=volume,
        velocity=velocity,
        n_bursts=n_bursts,
        mean_burst_duration=sum(b.duration for b in bursts) / n_bursts if n_bursts else 0.0,
        mean_burst_value=sum(b.value for b in bursts) / n_bursts if n_bursts else 0.0,
    )


def chi_grams(observed: Mapping[str, float], expected: Mapping[str, float],
              ) -> list[tuple[str, float]]:
    """Per-class contributions (observed - expected) / sqrt(expected),
    ranked by descending contribution (ties by class name)."""
    classes = sorted(set(observed) | set(expected))
    for cls in classes:
        if expected.get(cls, 0) <= 0:
            raise ValueError(f"expected count for {cls!r} must be positive")
    rows = [(cls, (observed.get(cls, 0) - expected[cls]) / math.sqrt(expected[cls]))
            for cls in classes]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows
