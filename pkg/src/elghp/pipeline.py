"""Parallel extraction/classification pipeline.

With T > 1 threads, T/2 extractor threads each own one FIFO queue and push
``WorkItem``s for a contiguous block of the input. T/2 classifier threads poll
all queues round-robin and run 1NN on whatever they find. Extractors stop when
their block is done; classifiers stop once the shared consumed count reaches
the number of inputs. T = 1 runs the same steps serially.

Test images may be given as ``GrayImage`` or as PGM paths; paths are read by
the extractor threads.
"""

from __future__ import annotations

import csv
import io
import os
import queue
import threading
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .descriptor import DescriptorConfig, extract_features
from .imageio import GrayImage, read_pgm, resize_to_canonical
from .matcher import Gallery, GalleryEntry, MatchError, MatchResult, nearest


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    threads: int = 1
    queue_capacity: int | None = None

    def __post_init__(self):
        if self.threads < 1:
            raise PipelineError(f"thread count must be >= 1, got {self.threads}")
        if self.threads > 1 and self.threads % 2:
            raise PipelineError(f"thread count must be 1 or even, got {self.threads}")
        if self.queue_capacity is not None and self.queue_capacity < 1:
            raise PipelineError("queue capacity must be >= 1")


@dataclass(frozen=True, eq=False)
class WorkItem:
    index: int
    name: str
    features: np.ndarray


@dataclass
class PipelineReport:
    results: list[MatchResult]
    wall_seconds: float
    extract_seconds: float
    classify_seconds: float
    threads: int
    produced: int = 0
    consumed: int = 0
    queue_producers: dict[int, set[str]] = field(default_factory=dict)

    def result_set(self):
        """Order-free view used to compare runs across thread counts."""
        return sorted((r.query, r.identity, r.distance) for r in self.results)


def _features_of(img, cfg: DescriptorConfig) -> np.ndarray:
    # paths are read inside the extraction phase, as disk speed is part of its cost
    if not isinstance(img, GrayImage):
        img = read_pgm(img)
    return extract_features(resize_to_canonical(img), cfg)


def _blocks(n: int, parts: int) -> list[range]:
    base, extra = divmod(n, parts)
    out, start = [], 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        out.append(range(start, start + size))
        start += size
    return out


class _Counter:
    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def increment(self) -> int:
        with self._lock:
            self.value += 1
            return self.value


def _serial(images, gallery, cfg):
    results = []
    t_extract = t_classify = 0.0
    for name, img in images:
        t0 = time.perf_counter()
        feats = _features_of(img, cfg)
        t1 = time.perf_counter()
        results.append(nearest(feats, gallery, name))
        t_extract += t1 - t0
        t_classify += time.perf_counter() - t1
    return results, t_extract, t_classify


def run_pipeline(
    test_images: Sequence[tuple[str, GrayImage | os.PathLike]],
    gallery: Gallery | Sequence[GalleryEntry],
    cfg: DescriptorConfig = DescriptorConfig(),
    pcfg: PipelineConfig = PipelineConfig(),
) -> PipelineReport:
    gallery = gallery if isinstance(gallery, Gallery) else Gallery(gallery)
    if not len(gallery):
        raise MatchError("empty gallery")
    if gallery.dim != cfg.length:
        raise MatchError(f"dimension mismatch: gallery {gallery.dim} vs descriptor {cfg.length}")
    images = list(test_images)
    n = len(images)

    start = time.perf_counter()
    if pcfg.threads == 1 or n == 0:
        results, t_ext, t_cls = _serial(images, gallery, cfg)
        return PipelineReport(
            results, time.perf_counter() - start, t_ext, t_cls, pcfg.threads, n, n
        )

    half = pcfg.threads // 2
    queues = [queue.Queue(maxsize=pcfg.queue_capacity or 0) for _ in range(half)]
    producers: dict[int, set[str]] = {i: set() for i in range(half)}
    consumed = _Counter()
    produced = _Counter()
    busy_extract = [0.0] * half
    busy_classify = [0.0] * half
    per_classifier: list[list[tuple[int, MatchResult]]] = [[] for _ in range(half)]
    errors: list[BaseException] = []
    stop = threading.Event()

    def extractor(slot: int, block: range):
        producers[slot].add(threading.current_thread().name)
        q = queues[slot]
        try:
            for i in block:
                if stop.is_set():
                    return
                name, img = images[i]
                t0 = time.perf_counter()
                item = WorkItem(i, name, _features_of(img, cfg))
                busy_extract[slot] += time.perf_counter() - t0
                produced.increment()
                while True:
                    try:
                        q.put(item, timeout=0.05)
                        break
                    except queue.Full:
                        if stop.is_set():
                            return
        except BaseException as exc:
            errors.append(exc)
            stop.set()

    def classifier(slot: int):
        out = per_classifier[slot]
        turn = slot
        try:
            while consumed.value < n and not stop.is_set():
                item = None
                for k in range(half):
                    try:
                        item = queues[(turn + k) % half].get_nowait()
                    except queue.Empty:
                        continue
                    turn = (turn + k + 1) % half
                    break
                if item is None:
                    time.sleep(0.0005)
                    continue
                consumed.increment()
                t0 = time.perf_counter()
                out.append((item.index, nearest(item.features, gallery, item.name)))
                busy_classify[slot] += time.perf_counter() - t0
        except BaseException as exc:
            errors.append(exc)
            stop.set()

    workers = [
        threading.Thread(target=extractor, args=(i, blk), name=f"extract-{i}", daemon=True)
        for i, blk in enumerate(_blocks(n, half))
    ] + [
        threading.Thread(target=classifier, args=(i,), name=f"classify-{i}", daemon=True)
        for i in range(half)
    ]
    for t in workers:
        t.start()
    for t in workers:
        t.join()
    if errors:
        raise errors[0]

    ordered = sorted((pair for chunk in per_classifier for pair in chunk), key=lambda p: p[0])
    results = [r for _, r in ordered]
    return PipelineReport(
        results,
        time.perf_counter() - start,
        sum(busy_extract),
        sum(busy_classify),
        pcfg.threads,
        produced.value,
        consumed.value,
        producers,
    )


TIMING_HEADER = ("threads", "wall_seconds", "extract_seconds", "classify_seconds", "images", "gallery_size")


def time_pipeline(test_images, gallery, cfg: DescriptorConfig, thread_counts: Sequence[int],
                  queue_capacity: int | None = None) -> list[PipelineReport]:
    """One report per thread count on identical inputs.

    Raises ``PipelineError`` if any thread count yields different matches
    than the first.
    """
    configs = [PipelineConfig(t, queue_capacity) for t in thread_counts]
    reports = []
    for pcfg in configs:
        reports.append(run_pipeline(test_images, gallery, cfg, pcfg))
    baseline = reports[0].result_set() if reports else None
    for rep in reports[1:]:
        if rep.result_set() != baseline:
            raise PipelineError(f"results at {rep.threads} threads differ from {reports[0].threads} threads")
    return reports


def timing_csv(reports: Sequence[PipelineReport], gallery_size: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TIMING_HEADER)
    for r in reports:
        writer.writerow([
            r.threads,
            f"{r.wall_seconds:.6f}",
            f"{r.extract_seconds:.6f}",
            f"{r.classify_seconds:.6f}",
            len(r.results),
            gallery_size,
        ])
    return buf.getvalue()
