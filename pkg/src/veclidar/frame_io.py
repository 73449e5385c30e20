"""Scan frame serialization.

PLY layout (binary_little_endian 1.0): one `vertex` element per ray with
properties, in order: x, y, z (float64, base-frame point), range
(float64), hit (uchar 0/1). CSV carries the same five columns with a
header row. Ranges round-trip bit-exactly in both formats (CSV uses
repr-style shortest float formatting).
"""

from __future__ import annotations

import csv

import numpy as np

from .sensor import ScanFrame

_PLY_DTYPE = np.dtype([
    ("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("range", "<f8"), ("hit", "u1"),
])


def write_ply(path, frame: ScanFrame) -> None:
    rec = np.empty(frame.n_rays, dtype=_PLY_DTYPE)
    rec["x"] = frame.points_base[:, 0]
    rec["y"] = frame.points_base[:, 1]
    rec["z"] = frame.points_base[:, 2]
    rec["range"] = frame.ranges
    rec["hit"] = frame.hit_flags.astype(np.uint8)
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"comment veclidar scan env={frame.env_id} t={frame.t!r}\n"
        f"element vertex {frame.n_rays}\n"
        "property double x\n"
        "property double y\n"
        "property double z\n"
        "property double range\n"
        "property uchar hit\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(rec.tobytes())


def read_ply(path):
    """Returns (points (n,3), ranges (n,), hits (n,) bool)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    end = blob.index(b"end_header\n") + len(b"end_header\n")
    header = blob[:end].decode("ascii").splitlines()
    if header[0] != "ply" or "format binary_little_endian 1.0" not in header[1]:
        raise ValueError("not a veclidar binary PLY file")
    n = next(int(line.split()[-1]) for line in header if line.startswith("element vertex"))
    rec = np.frombuffer(blob[end:], dtype=_PLY_DTYPE, count=n)
    points = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
    return points, rec["range"].astype(np.float64), rec["hit"].astype(bool)


def write_csv(path, frame: ScanFrame) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "z", "range", "hit"])
        for p, r, h in zip(frame.points_base, frame.ranges, frame.hit_flags):
            writer.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                             repr(float(r)), int(h)])


def read_csv(path):
    """Returns (points (n,3), ranges (n,), hits (n,) bool)."""
    points, ranges, hits = [], [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        for row in reader:
            points.append([float(row[0]), float(row[1]), float(row[2])])
            ranges.append(float(row[3]))
            hits.append(bool(int(row[4])))
    return (np.asarray(points, dtype=np.float64).reshape(-1, 3),
            np.asarray(ranges, dtype=np.float64),
            np.asarray(hits, dtype=bool))


def load_frame(path):
    """Dispatch on extension: .ply or .csv."""
    path = str(path)
    if path.endswith(".ply"):
        return read_ply(path)
    if path.endswith(".csv"):
        return read_csv(path)
    raise ValueError(f"unsupported frame format: {path}")
