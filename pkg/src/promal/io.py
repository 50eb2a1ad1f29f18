"""Reading datasets and writing every output artifact as plain CSV text.

Numbers are written with 12 significant digits (``%.12g``). Matrix CSVs may
carry one header row; it is detected by any field failing to parse as a
number.
"""
import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import DuplicateLabel, MissingArtifact, ParseError, ShapeMismatch

FORMAT_VERSION = "1"
FLOAT_FMT = "%.12g"


@dataclass
class MatrixSet:
    labels: List[str]
    matrices: List[np.ndarray]
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        self.labels = [str(lab) for lab in self.labels]
        self.matrices = [np.asarray(x, dtype=float) for x in self.matrices]
        if len(self.labels) != len(self.matrices):
            raise ValueError(f"{len(self.labels)} labels for {len(self.matrices)} matrices")
        seen = set()
        for lab in self.labels:
            if lab in seen:
                raise DuplicateLabel(f"label {lab!r} appears more than once")
            if not lab or any(c.isspace() for c in lab) or "/" in lab or "\\" in lab:
                raise ValueError(f"label {lab!r} must be non-empty without whitespace or slashes")
            seen.add(lab)
        if self.matrices:
            shape = self.matrices[0].shape
            for lab, x in zip(self.labels, self.matrices):
                if x.shape != shape:
                    raise ShapeMismatch(lab, shape, x.shape)
            if self.coords is not None:
                self.coords = np.asarray(self.coords, dtype=float)
                if self.coords.ndim != 2 or self.coords.shape[0] != shape[1]:
                    raise ValueError(
                        f"coords has {self.coords.shape[0]} rows but matrices have {shape[1]} columns"
                    )

    def __len__(self):
        return len(self.matrices)

    @property
    def shape(self):
        return self.matrices[0].shape


def _is_number(field: str) -> bool:
    try:
        float(field)
    except ValueError:
        return False
    return True


def read_table(path):
    """Parse a numeric CSV file; returns ``(header or None, data)``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, [f.strip() for f in row]) for i, row in enumerate(csv.reader(fh)) if row]
    rows = [(ln, r) for ln, r in rows if any(r)]
    if not rows:
        raise ParseError(path, 1, 1, "file is empty")
    header = None
    if not all(_is_number(f) for f in rows[0][1]):
        header = rows[0][1]
        rows = rows[1:]
    if not rows:
        raise ParseError(path, 1, 1, "no numeric rows")
    width = len(rows[0][1])
    data = np.empty((len(rows), width))
    for r, (line, fields) in enumerate(rows):
        if len(fields) != width:
            raise ParseError(path, line, len(fields), f"expected {width} fields, found {len(fields)}")
        for c, f in enumerate(fields):
            try:
                v = float(f)
            except ValueError:
                raise ParseError(path, line, c + 1, f"not a number: {f!r}") from None
            if not np.isfinite(v):
                raise ParseError(path, line, c + 1, f"non-finite value {f!r}")
            data[r, c] = v
    return header, data


def read_matrix(path) -> np.ndarray:
    return read_table(path)[1]


def _fmt(v) -> str:
    return FLOAT_FMT % v


def write_matrix(path, a, header: Optional[Sequence[str]] = None):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in a:
            w.writerow([_fmt(v) for v in row])


def _write_labelled(path, header, labels, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for lab, row in zip(labels, rows):
            w.writerow([lab] + [_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _read_labelled(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError(path, 1, 1, "file is empty")
    header, body = rows[0], rows[1:]
    labels, values = [], []
    for i, r in enumerate(body, start=2):
        labels.append(r[0])
        try:
            values.append([float(f) for f in r[1:]])
        except ValueError as exc:
            raise ParseError(path, i, 2, str(exc)) from None
        if len(r) != len(header):
            raise ParseError(path, i, len(r), f"expected {len(header)} fields, found {len(r)}")
    return header, labels, np.array(values, dtype=float).reshape(len(body), len(header) - 1)


# -- datasets ---------------------------------------------------------------


def read_manifest(manifest_path):
    """Return ``(entries, coords_path)`` with paths resolved against the manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no such manifest: {manifest_path}")
    base = manifest_path.parent
    entries, coords = [], None
    with open(manifest_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ParseError(manifest_path, line_no, 1, "expected '<label> <path>'")
            key, rel = parts
            p = Path(rel)
            p = p if p.is_absolute() else base / p
            if key == "coords" and coords is None and not entries:
                coords = p
            else:
                entries.append((key, p))
    return entries, coords


def load_dataset(manifest_path) -> MatrixSet:
    entries, coords_path = read_manifest(manifest_path)
    if not entries:
        raise ParseError(manifest_path, 1, 1, "manifest lists no matrices")
    labels, mats, seen = [], [], set()
    shape = None
    for label, path in entries:
        if label in seen:
            raise DuplicateLabel(f"label {label!r} appears more than once in {manifest_path}")
        seen.add(label)
        x = read_matrix(path)
        if shape is None:
            shape = x.shape
        elif x.shape != shape:
            raise ShapeMismatch(label, shape, x.shape)
        labels.append(label)
        mats.append(x)
    coords = read_matrix(coords_path) if coords_path is not None else None
    return MatrixSet(labels, mats, coords)


def write_manifest(path, entries, coords_path=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        if coords_path is not None:
            fh.write(f"coords {coords_path}\n")
        for label, p in entries:
            fh.write(f"{label} {p}\n")


def save_dataset(mset: MatrixSet, out_dir, truth=None, meta: Optional[dict] = None) -> Path:
    """Write matrices, coordinates, manifest and (optionally) planted truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for lab, x in zip(mset.labels, mset.matrices):
        write_matrix(out / "matrices" / f"{lab}.csv", x)
        entries.append((lab, f"matrices/{lab}.csv"))
    coords_rel = None
    if mset.coords is not None:
        write_matrix(out / "coords.csv", mset.coords)
        coords_rel = "coords.csv"
    write_manifest(out / "manifest.txt", entries, coords_rel)
    if truth is not None:
        t = out / "truth"
        write_matrix(t / "M.csv", truth.M)
        for lab, r in zip(mset.labels, truth.rotations):
            write_matrix(t / "rotations" / f"{lab}.csv", r)
        _write_labelled(t / "scales.csv", ["label", "scale"], mset.labels, [[float(a)] for a in truth.scales])
        m = truth.translations.shape[1]
        _write_labelled(
            t / "translations.csv",
            ["label"] + [f"t{j + 1}" for j in range(m)],
            mset.labels,
            [list(map(float, row)) for row in truth.translations],
        )
        _write_labelled(t / "groups.csv", ["label", "group"], mset.labels, [[int(g)] for g in truth.groups])
    if meta is not None:
        _write_json(out / "sim.json", meta)
    return out / "manifest.txt"


def read_groups(path):
    _, labels, values = _read_labelled(path)
    return labels, values[:, 0].astype(int)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- alignment results --------------------------------------------------------


def save_alignment(result, out_dir, config: Optional[dict] = None):
    from . import __version__

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for lab, a, r in zip(result.labels, result.aligned, result.rotations):
        write_matrix(out / "aligned" / f"{lab}.csv", a)
        write_matrix(out / "rotations" / f"{lab}.csv", r)
    if result.projections is not None:
        for lab, q in zip(result.labels, result.projections):
            write_matrix(out / "projections" / f"{lab}.csv", q)
    _write_labelled(out / "scales.csv", ["label", "scale"], result.labels, [[float(a)] for a in result.scales])
    m = result.translations.shape[1]
    _write_labelled(
        out / "translations.csv",
        ["label"] + [f"t{j + 1}" for j in range(m)],
        result.labels,
        [list(map(float, t)) for t in result.translations],
    )
    write_matrix(out / "reference.csv", result.reference)
    _write_labelled(
        out / "objective_history.csv",
        ["iteration", "objective"],
        [str(i + 1) for i in range(result.n_iter)],
        [[float(v)] for v in result.objective_history],
    )
    meta = {
        "format_version": FORMAT_VERSION,
        "tool": "promal",
        "version": __version__,
        "method": result.method,
        "config": config or {},
        "converged": bool(result.converged),
        "non_unique": bool(result.non_unique),
        "n_iter": result.n_iter,
        "final_change": float(result.final_change),
        "initial_objective": float(result.initial_objective),
        "labels": list(result.labels),
    }
    _write_json(out / "run.json", meta)


def load_alignment(in_dir):
    from .align import AlignmentResult

    d = Path(in_dir)
    if not (d / "run.json").is_file():
        raise MissingArtifact(f"{d} is not an alignment directory (run.json missing)")
    with open(d / "run.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    labels = meta["labels"]

    def each(sub):
        files = [d / sub / f"{lab}.csv" for lab in labels]
        missing = [str(f) for f in files if not f.is_file()]
        if missing:
            raise MissingArtifact(f"missing {sub} files: {', '.join(missing)}")
        return [read_matrix(f) for f in files]

    rotations = each("rotations")
    aligned = each("aligned")
    projections = each("projections") if (d / "projections").is_dir() else None
    _, _, scales = _read_labelled(d / "scales.csv")
    _, _, translations = _read_labelled(d / "translations.csv")
    _, _, hist = _read_labelled(d / "objective_history.csv")
    res = AlignmentResult(
        labels=labels,
        rotations=rotations,
        scales=scales[:, 0],
        translations=translations,
        aligned=aligned,
        reference=read_matrix(d / "reference.csv"),
        objective_history=list(hist[:, 0]),
        projections=projections,
        method=meta.get("method", "gpa"),
        converged=meta.get("converged", True),
        non_unique=meta.get("non_unique", False),
        initial_objective=meta.get("initial_objective", float("nan")),
        final_change=meta.get("final_change", 0.0),
    )
    return res, meta


# -- distances, embeddings, clusters ------------------------------------------


def write_distance_csv(path, dm):
    _write_labelled(path, ["label"] + list(dm.labels), dm.labels, [list(map(float, r)) for r in dm.values])


def read_distance_csv(path, kind="residual", form="squared"):
    from .distance import DistanceMatrix

    header, labels, values = _read_labelled(path)
    if header[0] != "label" or header[1:] != labels:
        raise ParseError(path, 1, 1, "header must be 'label,<labels...>' matching the row labels")
    meta = Path(str(path) + ".json")
    if meta.is_file():
        with open(meta, encoding="utf-8") as fh:
            info = json.load(fh)
        kind, form = info.get("kind", kind), info.get("form", form)
    return DistanceMatrix(labels, kind, form, values)


def write_distance_meta(path, dm, extra: Optional[dict] = None):
    info = {"format_version": FORMAT_VERSION, "kind": dm.kind, "form": dm.form}
    info.update(extra or {})
    _write_json(Path(str(path) + ".json"), info)


def write_embedding_csv(path, emb):
    header = ["label"] + [f"dim{j + 1}" for j in range(emb.dims)]
    _write_labelled(path, header, emb.labels, [list(map(float, r)) for r in emb.coords])


def read_embedding_csv(path):
    _, labels, coords = _read_labelled(path)
    return labels, coords


def write_scan_csv(path, scan):
    _write_labelled(path, ["k", "stress1"], [str(k) for k, _ in scan], [[float(s)] for _, s in scan])


def write_merges_csv(path, dend):
    _write_labelled(
        path,
        ["step", "node_a", "node_b", "height"],
        [str(i + 1) for i in range(len(dend.merges))],
        [[mg.node_a, mg.node_b, float(mg.height)] for mg in dend.merges],
    )


def write_cut_csv(path, labels, clusters):
    _write_labelled(path, ["label", "cluster"], labels, [[int(c)] for c in clusters])


def read_covariates(path):
    """Per-label covariate table: ``label,<col1>,...``; returns header and dict."""
    header, labels, values = _read_labelled(path)
    return header[1:], dict(zip(labels, values))


def env_threads(default: Optional[int] = None) -> int:
    v = os.environ.get("PROMAL_THREADS")
    if v:
        return max(1, int(v))
    return default or os.cpu_count() or 1
