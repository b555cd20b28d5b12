"""On-disk formats: JSON documents, CSV tables, ASCII 16-bit PGM heatmaps.

Every writer takes a ``provenance`` mapping (config hash and seed) that is
embedded in the file: as ``# key=value`` comment lines in CSV and PGM, and as
top-level fields in JSON.  Floats in CSV use 17 significant digits.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .hilbert import DensityMatrix
from .phasespace import Marginal, QuasiProbGrid
from .probe import ProbeParams
from .tomography import TomogramDataset

FLOAT_FMT = "%.17g"
PGM_MAXVAL = 65535


def fmt(x: float) -> str:
    return FLOAT_FMT % x


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _comment_lines(provenance: dict) -> str:
    return "".join(f"# {k}={provenance[k]}\n" for k in sorted(provenance))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj: dict, provenance: dict | None = None):
    doc = dict(obj)
    if provenance:
        doc.update(provenance)
    Path(path).write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


# -- density matrices ------------------------------------------------------------

def density_matrix_to_dict(rho: DensityMatrix) -> dict:
    flat = rho.elements.reshape(-1)
    return {
        "dim": rho.dim,
        "elements": [[float(z.real), float(z.imag)] for z in flat],
        "truncation_deficit": rho.truncation_deficit,
        "label": rho.label,
    }


def density_matrix_from_dict(doc: dict) -> DensityMatrix:
    dim = int(doc["dim"])
    pairs = np.asarray(doc["elements"], dtype=float)
    if pairs.shape != (dim * dim, 2):
        raise ValueError(f"expected {dim * dim} [re, im] pairs, got shape {pairs.shape}")
    elements = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(dim, dim)
    return DensityMatrix(elements, float(doc.get("truncation_deficit", 0.0)), doc.get("label", ""))


# -- grids ---------------------------------------------------------------------

def write_grid_csv(path, grid: QuasiProbGrid, provenance: dict):
    ax = grid.axis
    with open(path, "w", newline="") as fh:
        fh.write(_comment_lines(provenance))
        fh.write("alpha_r,alpha_i,value\n")
        for j, ar in enumerate(ax):
            row = grid.values[j]
            fh.writelines(f"{fmt(ar)},{fmt(ai)},{fmt(v)}\n" for ai, v in zip(ax, row))


def pgm_scale(grid: QuasiProbGrid) -> tuple[float, float]:
    return float(grid.values.min()), float(grid.values.max())


def write_pgm(path, grid: QuasiProbGrid, provenance: dict):
    """ASCII (P2) 16-bit graymap; top row is the largest alpha_i, columns run along alpha_r."""
    lo, hi = pgm_scale(grid)
    span = hi - lo if hi > lo else 1.0
    levels = np.rint((grid.values - lo) / span * PGM_MAXVAL).astype(np.int64)
    image = levels.T[::-1]
    with open(path, "w") as fh:
        fh.write("P2\n")
        fh.write(_comment_lines(provenance))
        fh.write(f"{grid.n} {grid.n}\n{PGM_MAXVAL}\n")
        for row in image:
            fh.write(" ".join(map(str, row)) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if tokens[0] != "P2":
        raise ValueError("not an ASCII PGM")
    w, h = int(tokens[1]), int(tokens[2])
    data = np.array(tokens[4:], dtype=np.int64)
    return data.reshape(h, w)


def grid_sidecar(grid: QuasiProbGrid, **extra) -> dict:
    lo, hi = pgm_scale(grid)
    doc = {
        "s": grid.s,
        "half_extent": grid.half_extent,
        "n": grid.n,
        "spacing": grid.spacing,
        "meta": grid.meta,
        "min": lo,
        "max": hi,
        "normalization_residual": grid.integral() - 1.0,
        "pgm_scale": {"min": lo, "max": hi, "maxval": PGM_MAXVAL},
    }
    doc.update(extra)
    return doc


def write_grid(stem, grid: QuasiProbGrid, provenance: dict, **extra):
    """Write ``stem.csv``, ``stem.pgm`` and the ``stem.json`` sidecar."""
    stem = Path(stem)
    write_grid_csv(stem.with_suffix(".csv"), grid, provenance)
    write_pgm(stem.with_suffix(".pgm"), grid, provenance)
    write_json(stem.with_suffix(".json"), grid_sidecar(grid, **extra), provenance)


def read_grid(stem) -> QuasiProbGrid:
    stem = Path(stem)
    if stem.suffix in (".csv", ".json", ".pgm"):
        stem = stem.with_suffix("")
    side = read_json(stem.with_suffix(".json"))
    n = int(side["n"])
    lines = [ln for ln in stem.with_suffix(".csv").read_text().splitlines() if not ln.startswith("#")]
    values = np.array([float(ln.rsplit(",", 1)[1]) for ln in lines[1:]]).reshape(n, n)
    return QuasiProbGrid(float(side["s"]), float(side["half_extent"]), n, values, side.get("meta", "direct"))


# -- marginals and datasets --------------------------------------------------------

def write_marginal_csv(path, m: Marginal, provenance: dict):
    with open(path, "w", newline="") as fh:
        fh.write(_comment_lines({**provenance, "theta": fmt(m.theta)}))
        fh.write("x,density\n")
        fh.writelines(f"{fmt(x)},{fmt(d)}\n" for x, d in zip(m.xs, m.density))


def write_dataset(path, ds: TomogramDataset, provenance: dict):
    """JSON header on one ``#`` line, then CSV rows (pulse_index, theta, P_L)."""
    header = {
        "probe": ds.probe.to_dict(),
        "seed": ds.seed,
        "state_label": ds.state_label,
        "angles": [fmt(a) for a in ds.angles],
        **provenance,
    }
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(_jsonable(header), sort_keys=True) + "\n")
        fh.write("pulse_index,theta,P_L\n")
        k = 0
        for theta, block in zip(ds.angles, ds.samples):
            t = fmt(theta)
            for v in block:
                fh.write(f"{k},{t},{fmt(v)}\n")
                k += 1


def read_dataset(path) -> TomogramDataset:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("dataset file lacks its JSON header line")
        header = json.loads(first[2:])
        reader = csv.reader(fh)
        next(reader)
        angles = [float(a) for a in header["angles"]]
        blocks = {a: [] for a in angles}
        for _, theta, value in reader:
            blocks[float(theta)].append(float(value))
    probe = ProbeParams(**header["probe"])
    return TomogramDataset(probe, np.array(angles), tuple(np.array(blocks[a]) for a in angles),
                           header.get("seed"), header.get("state_label", ""))
