"""Compare the compiled and numpy kernels on feature extraction and 1NN search.

    python3 benchmarks/bench_backends.py [--images 200] [--gallery 2000] [--repeat 5]

Prints a table of per-call times and the compiled/numpy speedup.
"""

import argparse
import timeit

import numpy as np

from elghp import _backend
from elghp.descriptor import DescriptorConfig, _offsets_array


def _best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--images", type=int, default=200)
    parser.add_argument("--gallery", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    cfg = DescriptorConfig()
    rng = np.random.default_rng(args.seed)
    images = [np.ascontiguousarray(rng.integers(0, 256, (64, 64), dtype=np.uint8)) for _ in range(args.images)]
    offsets = _offsets_array(cfg.delta)
    radii = np.asarray(cfg.radii, dtype=np.int32)
    gallery = np.ascontiguousarray(rng.integers(0, 64, (args.gallery, cfg.length)).astype(np.uint32))
    queries = gallery[rng.integers(0, args.gallery, 16)] + 1

    backends = _backend.available_backends()
    timings = {}
    for name, mod in backends.items():
        def extract(mod=mod):
            for img in images:
                mod.code_histograms(img, offsets, radii)

        def search(mod=mod):
            for q in queries:
                mod.l1_nearest(q, gallery)

        timings[name] = (
            _best(extract, 1, args.repeat) / len(images),
            _best(search, 1, args.repeat) / len(queries),
        )

    print(f"images {args.images} (64x64), gallery {args.gallery} x {cfg.length}, best of {args.repeat}")
    print(f"{'backend':<8} {'extract ms/image':>17} {'1NN ms/query':>13} {'L1 us/row':>10}")
    for name, (ext, nn) in timings.items():
        print(f"{name:<8} {ext * 1e3:17.3f} {nn * 1e3:13.3f} {nn / args.gallery * 1e6:10.2f}")
    if {"cython", "python"} <= timings.keys():
        c, p = timings["cython"], timings["python"]
        print(f"speedup  {p[0] / c[0]:17.1f}x {p[1] / c[1]:12.1f}x")


if __name__ == "__main__":
    main()
