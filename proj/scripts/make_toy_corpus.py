#!/usr/bin/env python3
"""Regenerate the checked-in toy corpus under data/toy/.

Four well separated feature clusters in 8 dimensions. The background bag
samples all of them (codebook training data), each gallery video sits on one
or two clusters, and the query shares video_a's cluster so a correct search
ranks video_a first. Deterministic; run from the repository root.
"""

import pathlib
import random
import struct

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "toy"
DIM = 8
MAGIC = b"VRFPFEAT"
VERSION = 1

rng = random.Random(20240901)

centers = [[rng.uniform(-2.0, 2.0) for _ in range(DIM)] for _ in range(4)]


def draw(center, sigma=0.3):
    return [rng.gauss(mu, sigma) for mu in centers[center]]


def write_feat(name, rows):
    path = OUT / name
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIQ", VERSION, DIM, len(rows)))
        for row in rows:
            f.write(struct.pack(f"<{DIM}f", *row))
    print(f"wrote {path} ({len(rows)} rows)")


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    background = [draw(t % 4) for t in range(200)]
    video_a = [draw(0) for _ in range(24)]
    video_b = [draw(1) for _ in range(24)]
    video_c = [draw(2 + t % 2) for t in range(24)]
    query = [draw(0) for _ in range(40)]

    write_feat("background.feat", background)
    write_feat("video_a.feat", video_a)
    write_feat("video_b.feat", video_b)
    write_feat("video_c.feat", video_c)
    write_feat("query.feat", query)

    manifest = OUT / "manifest.tsv"
    with open(manifest, "w") as f:
        f.write("# toy retrieval corpus, regenerate with scripts/make_toy_corpus.py\n")
        f.write("background\tbackground.feat\tbackground\n")
        f.write("video_a\tvideo_a.feat\tvideo-frames\n")
        f.write("video_b\tvideo_b.feat\tvideo-frames\n")
        f.write("video_c\tvideo_c.feat\tvideo-frames\n")
        f.write("query\tquery.feat\tquery-images\n")
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()
