"""L1 / 1NN matching, recognition accuracy and the random split harness."""

from __future__ import annotations

import csv
import io
import os
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _backend
from .descriptor import DescriptorConfig, extract_features
from .imageio import GrayImage


class MatchError(ValueError):
    pass


def identity_of(name: str) -> str:
    """Identity encoded in an image name: the file stem up to its last underscore.

    >>> identity_of("subject07_3.pgm")
    'subject07'
    """
    stem = os.path.basename(name)
    if "." in stem:
        stem = stem.rsplit(".", 1)[0]
    ident, sep, _ = stem.rpartition("_")
    if not sep or not ident:
        raise MatchError(f"image name {name!r} does not follow <identity>_<index>")
    return ident


def _as_features(v) -> np.ndarray:
    return np.ascontiguousarray(v, dtype=np.uint32)


def l1_distance(v1, v2) -> int:
    a, b = np.asarray(v1), np.asarray(v2)
    if a.shape != b.shape:
        raise MatchError(f"dimension mismatch: {a.shape[0] if a.ndim else 0} vs {b.shape[0] if b.ndim else 0}")
    return int(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum())


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    name: str
    identity: str
    features: np.ndarray

    @classmethod
    def from_name(cls, name: str, features) -> GalleryEntry:
        return cls(name, identity_of(name), _as_features(features))


class Gallery:
    """Immutable stack of gallery entries with a contiguous feature matrix.

    ``version`` counts the registrations that produced this snapshot.
    """

    def __init__(self, entries: Iterable[GalleryEntry] = (), version: int = 0):
        self.entries: tuple[GalleryEntry, ...] = tuple(entries)
        if self.entries:
            dims = {e.features.shape[0] for e in self.entries}
            if len(dims) != 1:
                raise MatchError(f"gallery mixes feature lengths {sorted(dims)}")
            matrix = np.stack([_as_features(e.features) for e in self.entries])
        else:
            matrix = np.zeros((0, 0), dtype=np.uint32)
        matrix.setflags(write=False)
        self.matrix = matrix
        self.version = version

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> GalleryEntry:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1] if self.entries else 0

    @property
    def identities(self) -> set[str]:
        return {e.identity for e in self.entries}

    def extended(self, new_entries: Iterable[GalleryEntry]) -> Gallery:
        return Gallery(self.entries + tuple(new_entries), self.version + 1)


@dataclass(frozen=True)
class MatchResult:
    query: str
    identity: str
    distance: int
    index: int


def _gallery(gallery) -> Gallery:
    return gallery if isinstance(gallery, Gallery) else Gallery(gallery)


def nearest(query, gallery: Gallery | Sequence[GalleryEntry], query_name: str = "") -> MatchResult:
    """1NN by L1 distance; ties go to the lowest gallery index."""
    gallery = _gallery(gallery)
    if not len(gallery):
        raise MatchError("empty gallery")
    q = _as_features(query)
    if q.ndim != 1 or q.shape[0] != gallery.dim:
        raise MatchError(f"dimension mismatch: query {q.shape[0]} vs gallery {gallery.dim}")
    idx, dist = _backend.l1_nearest(q, gallery.matrix)
    return MatchResult(query_name, gallery[idx].identity, int(dist), int(idx))


def recognition_accuracy(results: Sequence[tuple[str, str]]) -> float:
    if not results:
        raise MatchError("no results to score")
    correct = sum(1 for truth, got in results if truth == got)
    return float(Fraction(100 * correct, len(results)))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 20
    repetitions: int = 10
    seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if not 0 < self.test_fraction < 100:
            raise MatchError(f"test fraction must lie in (0, 100), got {self.test_fraction}")
        if self.repetitions < 1:
            raise MatchError(f"repetitions must be >= 1, got {self.repetitions}")

    def test_size(self, n: int) -> int:
        # round half up, exactly
        return int(Fraction(self.test_fraction) * n / 100 + Fraction(1, 2))


def _rng(plan: SplitSpec, rep: int) -> np.random.Generator:
    return np.random.default_rng([plan.seed, rep, int(Fraction(plan.test_fraction) * 1000)])


def make_splits(names: Sequence[str], plan: SplitSpec) -> list[tuple[list[str], list[str]]]:
    """Random (test, gallery) partitions of ``names``, one per repetition."""
    names = list(names)
    n = len(names)
    if not n:
        raise MatchError("no names to split")
    k = plan.test_size(n)
    if k == 0 or k == n:
        raise MatchError(f"degenerate split: test size {k} of {n}")
    splits = []
    for rep in range(plan.repetitions):
        rng = _rng(plan, rep)
        if plan.stratified:
            test_idx = _stratified_pick(names, plan, rng)
        else:
            test_idx = set(rng.permutation(n)[:k].tolist())
        test = [names[i] for i in range(n) if i in test_idx]
        rest = [names[i] for i in range(n) if i not in test_idx]
        splits.append((test, rest))
    return splits


def _stratified_pick(names, plan, rng) -> set[int]:
    by_identity: dict[str, list[int]] = {}
    for i, name in enumerate(names):
        by_identity.setdefault(identity_of(name), []).append(i)
    picked = set()
    for idxs in by_identity.values():
        k = min(plan.test_size(len(idxs)), len(idxs) - 1)
        order = rng.permutation(len(idxs))[:k]
        picked.update(idxs[j] for j in order)
    return picked


@dataclass
class AccuracyReport:
    test_fraction: float
    accuracies: list[float] = field(default_factory=list)
    test_sizes: list[int] = field(default_factory=list)
    gallery_sizes: list[int] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float("nan")


def _feature_table(images, cfg):
    if isinstance(images, Mapping):
        images = images.items()
    table = {}
    for name, img in images:
        if isinstance(img, GrayImage):
            table[name] = _as_features(extract_features(img, cfg))
        else:
            table[name] = _as_features(img)
    return table


def run_experiment(images, cfg: DescriptorConfig, plan: SplitSpec) -> AccuracyReport:
    """Mean 1NN accuracy over ``plan.repetitions`` random splits.

    ``images`` maps convention-named image names to ``GrayImage`` (or to
    precomputed feature vectors). Features are computed once and reused
    across splits.
    """
    features = _feature_table(images, cfg)
    report = AccuracyReport(plan.test_fraction)
    for test, rest in make_splits(sorted(features), plan):
        gallery = Gallery(GalleryEntry.from_name(n, features[n]) for n in rest)
        pairs = [(identity_of(n), nearest(features[n], gallery, n).identity) for n in test]
        report.accuracies.append(recognition_accuracy(pairs))
        report.test_sizes.append(len(test))
        report.gallery_sizes.append(len(rest))
    return report


ACCURACY_HEADER = ("split", "repetition", "test_size", "gallery_size", "accuracy_percent")


def _fmt_fraction(f) -> str:
    return f"{f:g}"


def accuracy_csv(reports: Sequence[AccuracyReport]) -> str:
    """CSV rows per repetition, each split group closed by a ``mean`` row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ACCURACY_HEADER)
    for rep in reports:
        split = _fmt_fraction(rep.test_fraction)
        for i, (acc, t, g) in enumerate(zip(rep.accuracies, rep.test_sizes, rep.gallery_sizes)):
            writer.writerow([split, i, t, g, f"{acc:.4f}"])
        writer.writerow([split, "mean", rep.test_sizes[0], rep.gallery_sizes[0], f"{rep.mean:.4f}"])
    return buf.getvalue()
