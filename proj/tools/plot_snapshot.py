#!/usr/bin/env python3
"""Render a solver snapshot (.hdr/.bin pair) to a PNG image.

Snapshots store doubles interleaved per voxel, with the first grid axis
fastest.  Grids with one non-trivial axis are drawn as a line plot; grids
with two are drawn as an image; full 3D grids are sliced through the middle
of their first axis.
"""
import argparse
import sys

import numpy as np


def read_snapshot(base):
    header = {}
    with open(base + ".hdr") as f:
        for line in f:
            key, _, rest = line.partition(":")
            if rest:
                header[key.strip()] = rest.strip()
    dims = [int(x) for x in header["dims"].split()]
    lengths = [float(x) for x in header["lengths"].split()]
    comps = int(header["components"])
    data = np.fromfile(base + ".bin", dtype="<f8")
    expected = dims[0] * dims[1] * dims[2] * comps
    if data.size != expected:
        sys.exit(f"snapshot has {data.size} doubles, expected {expected}")
    data = data.reshape(dims[2], dims[1], dims[0], comps)
    return dims, lengths, comps, float(header["time"]), data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("base", help="snapshot path without the .bin/.hdr suffix")
    ap.add_argument("-o", "--output", help="PNG path (default: <base>.png)")
    ap.add_argument("-c", "--component", type=int, default=None,
                    help="component to draw (default: vector magnitude)")
    args = ap.parse_args()

    dims, lengths, comps, time, data = read_snapshot(args.base)
    if args.component is None:
        field = np.linalg.norm(data, axis=-1)
        label = "|u| (m)"
    else:
        if not 0 <= args.component < comps:
            sys.exit(f"component {args.component} out of range 0..{comps - 1}")
        field = data[..., args.component]
        label = f"u{args.component + 1} (m)"

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 6))
    live = [a for a in range(3) if dims[a] > 1]
    if len(live) <= 1:
        a = live[0] if live else 0
        x = (np.arange(dims[a]) + 0.5) * lengths[a] / dims[a]
        ax.plot(x, field.reshape(-1))
        ax.set_xlabel(f"x{a + 1} (m)")
        ax.set_ylabel(label)
        ax.set_title(f"t = {time:.6g} s")
    else:
        if len(live) == 2:
            a = [b for b in range(3) if b not in live][0]
        else:
            a = 0
        slicer = [slice(None)] * 3
        slicer[2 - a] = dims[a] // 2
        img = field[tuple(slicer)]
        others = [b for b in range(3) if b != a]
        im = ax.imshow(img, origin="lower",
                       extent=[0, lengths[others[0]], 0, lengths[others[1]]],
                       aspect="equal", cmap="viridis")
        fig.colorbar(im, ax=ax, label=label)
        ax.set_xlabel(f"x{others[0] + 1} (m)")
        ax.set_ylabel(f"x{others[1] + 1} (m)")
        title = f"t = {time:.6g} s"
        if len(live) == 3:
            title += f" (slice x1 = {lengths[0] * (dims[0] // 2 + 0.5) / dims[0]:.4g} m)"
        ax.set_title(title)

    out = args.output or args.base + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)


if __name__ == "__main__":
    main()
