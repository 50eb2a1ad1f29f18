"""Command-line entry point: ``promal <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 finished with warnings
(results are still written). The last line on stderr is always a
``STATUS: ...`` trailer.
"""
import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .align import AlignConfig, align
from .cluster import LINKAGES, agglomerate, cut, rand_index
from .distance import distance_matrix, pearson_upper
from .embed import STRESS_THRESHOLD, classical_mds, first_below, smacof, stress_scan
from .errors import MissingArtifact, NonConvergenceWarning, PromalError
from .io import (
    env_threads,
    load_alignment,
    load_dataset,
    read_covariates,
    read_distance_csv,
    read_groups,
    save_alignment,
    save_dataset,
    write_cut_csv,
    write_distance_csv,
    write_distance_meta,
    write_embedding_csv,
    write_merges_csv,
    write_scan_csv,
)
from .plot import scatter_svg
from .prior import PriorSpec
from .simulate import GENERATOR, SimSpec, generate

log = logging.getLogger("promal")

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2
METHOD_ALIASES = {"efficient": "efficient_promises"}


class UsageError(PromalError, ValueError):
    pass


def _int_pair(text):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'i,j', got {text!r}") from None
    return a, b


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return a, b


# -- simulate ---------------------------------------------------------------


def _spec_from_args(a) -> SimSpec:
    return SimSpec(
        n=a.n,
        m=a.m,
        N=a.N,
        noise_sd=a.noise,
        rotation_scheme=a.scheme,
        groups=a.groups,
        within_group_jitter=a.jitter,
        scales=a.scales,
        scale_range=a.scale_range,
        translations=a.translations,
        translation_sd=a.translation_sd,
        coords_dim=a.coords_dim,
        seed=a.seed,
    )


def simulate_to(spec: SimSpec, out) -> Path:
    mset, truth = generate(spec)
    meta = {"format_version": "1", "generator": GENERATOR, "spec": spec.to_dict(), "version": __version__}
    return save_dataset(mset, out, truth, meta)


def cmd_simulate(a):
    manifest = simulate_to(_spec_from_args(a), a.out)
    print(f"wrote {manifest}")
    return EXIT_OK


# -- align --------------------------------------------------------------------


def _prior_spec(k, bandwidth, prior, has_coords):
    if k == 0:
        return PriorSpec(kind="identity", k=0.0)
    if prior == "auto":
        prior = "similarity" if has_coords else "identity"
    if prior == "similarity":
        if not has_coords:
            raise UsageError("a similarity prior needs column coordinates ('coords <path>' in the manifest)")
        return PriorSpec(kind="similarity_gaussian", k=k, bandwidth=bandwidth)
    return PriorSpec(kind="identity", k=k)


def align_config(method, k=0.0, bandwidth=None, prior="auto", has_coords=False, scaling=True,
                 centering=True, tol=1e-8, max_iter=100, reference="mean", rotation_only=False,
                 threads=1) -> AlignConfig:
    method = METHOD_ALIASES.get(method, method)
    if k < 0:
        raise UsageError("--k must be >= 0")
    if method == "gpa" and k > 0:
        raise UsageError("--k applies to promises/efficient only; use --method promises")
    return AlignConfig(
        method=method,
        scaling=scaling,
        centering=centering,
        max_iter=max_iter,
        tol=tol,
        prior=_prior_spec(k, bandwidth, prior, has_coords),
        reference=reference,
        rotation_only=rotation_only,
        n_jobs=threads,
    )


def run_align(mset, cfg, out):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergenceWarning)
        res = align(mset, cfg)
    for w in caught:
        log.warning("%s", w.message)
    save_alignment(res, out, cfg.echo())
    return res


def cmd_align(a):
    mset = load_dataset(a.manifest)
    method = METHOD_ALIASES.get(a.method, a.method)
    if method == "opp" and len(mset) != 2:
        raise UsageError(f"--method opp aligns exactly N=2 matrices; {a.manifest} lists {len(mset)}")
    if len(mset) < 2:
        raise UsageError("need at least two matrices to align")
    cfg = align_config(
        method, a.k, a.bandwidth, a.prior, mset.coords is not None, not a.no_scaling,
        not a.no_centering, a.tol, a.max_iter, a.reference, a.rotation_only, _threads(a),
    )
    res = run_align(mset, cfg, a.out)
    print(f"{res.method}: {res.n_iter} iterations, final objective {res.objective_history[-1]:.12g}")
    if res.non_unique:
        log.warning("cross-product rank deficient: rotations are not unique (consider promises with --k > 0)")
    print(f"wrote {a.out}")
    return EXIT_OK if res.converged else EXIT_WARN


# -- dist ---------------------------------------------------------------------


def _looks_like_distance_csv(path: Path) -> bool:
    if not path.is_file():
        return False
    with open(path, encoding="utf-8") as fh:
        return fh.readline().startswith("label,")


def compute_distance(source, kind, form, center=True):
    src = Path(source)
    warn = False
    if src.is_dir():
        if kind == "raw":
            raise UsageError("raw distances need a dataset manifest, not an alignment directory")
        res, meta = load_alignment(src)
        if kind == "rotational" and meta.get("non_unique") and meta["config"].get("k", 0) == 0:
            log.warning("rotations come from a rank-deficient fit with k=0 and are not unique; "
                        "rotational distances may be arbitrary (prefer --method promises --k > 0)")
            warn = True
        return distance_matrix(res, kind, form), warn
    if _looks_like_distance_csv(src):
        return read_distance_csv(src, kind, form), warn
    if kind != "raw":
        raise MissingArtifact(f"{kind} distances need an alignment directory; {src} is not one")
    return distance_matrix(load_dataset(src), "raw", form, center=center), warn


def cmd_dist(a):
    dm, warn = compute_distance(a.source, a.kind, a.form, not a.no_center)
    if a.out:
        write_distance_csv(a.out, dm)
        write_distance_meta(a.out, dm)
        print(f"wrote {a.out}")
    if a.compare:
        other = read_distance_csv(a.compare)
        print(f"pearson correlation: {pearson_upper(dm, other):.6f}")
    return EXIT_WARN if warn else EXIT_OK


# -- mds ----------------------------------------------------------------------


def run_mds(dm, dims=None, scan=None, engine="smacof", plot_dims=(1, 2), color=None, prefix=None):
    """Embed `dm`; returns ``(embedding, scan rows or None, chosen k)``."""
    scan_rows = None
    if scan:
        scan_rows = stress_scan(dm, scan)
        if dims is None:
            dims = first_below(scan_rows) or scan
    if dims is None:
        dims = 2
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        emb = classical_mds(dm, dims) if engine == "classical" else smacof(dm, dims)
    for w in caught:
        log.warning("%s", w.message)
    if prefix is not None:
        prefix = str(prefix)
        write_embedding_csv(prefix + "_embedding.csv", emb)
        if scan_rows is not None:
            write_scan_csv(prefix + "_scan.csv", scan_rows)
        i, j = plot_dims
        if max(i, j) > emb.dims or min(i, j) < 1:
            raise UsageError(f"--plot-dims {i},{j} outside the {emb.dims} fitted dimensions")
        scatter_svg(
            prefix + ".svg", emb.coords[:, i - 1], emb.coords[:, j - 1], emb.labels,
            xlabel=f"dim{i}", ylabel=f"dim{j}", title=f"{dm.kind} distances, stress-1 {emb.stress1:.3f}",
            color=color,
        )
    return emb, scan_rows, dims


def cmd_mds(a):
    dm = read_distance_csv(a.distance)
    if a.plot_dims and a.dims and max(a.plot_dims) > a.dims:
        raise UsageError(f"--plot-dims {a.plot_dims} needs --dims >= {max(a.plot_dims)}")
    color = None
    if a.color_by:
        cols, table = read_covariates(a.color_by)
        col = a.color_column or cols[0]
        if col not in cols:
            raise UsageError(f"column {col!r} not in {a.color_by}")
        missing = [lab for lab in dm.labels if lab not in table]
        if missing:
            raise UsageError(f"{a.color_by} lacks labels: {', '.join(missing)}")
        color = [table[lab][cols.index(col)] for lab in dm.labels]
    emb, scan_rows, k = run_mds(dm, a.dims, a.scan, a.engine, a.plot_dims, color, a.out)
    if scan_rows is not None:
        for kk, s in scan_rows:
            print(f"k={kk} stress1={s:.6f}")
        hit = first_below(scan_rows)
        print(f"first k with stress1 < {STRESS_THRESHOLD}: {hit if hit is not None else 'none'}")
    print(f"{emb.engine} embedding in {k} dimensions, stress1 {emb.stress1:.6f}")
    return EXIT_OK if emb.converged else EXIT_WARN


# -- cluster ------------------------------------------------------------------


def run_cluster(dm, linkage, k, prefix=None):
    dend = agglomerate(dm, linkage)
    labels = cut(dend, k)
    if prefix is not None:
        write_merges_csv(str(prefix) + "_merges.csv", dend)
        write_cut_csv(str(prefix) + "_clusters.csv", dm.labels, labels)
    return dend, labels


def cmd_cluster(a):
    dm = read_distance_csv(a.distance)
    _, labels = run_cluster(dm, a.linkage, a.k, a.out)
    print(f"{a.k} clusters: " + " ".join(f"{lab}={c}" for lab, c in zip(dm.labels, labels)))
    if a.truth:
        truth_labels, groups = read_groups(a.truth)
        lookup = dict(zip(truth_labels, groups))
        print(f"rand index vs truth: {rand_index(labels, [lookup[lab] for lab in dm.labels]):.6f}")
    return EXIT_OK


# -- pipeline -----------------------------------------------------------------

PIPELINE_DEFAULTS = {
    "n": 20, "m": 60, "N": 12, "noise": 0.5, "scheme": "grouped", "groups": "6,6", "jitter": 0.05,
    "seed": 0, "coords_dim": 3, "method": "promises", "k": 10.0, "prior": "auto", "bandwidth": None,
    "scaling": True, "tol": 1e-8, "max_iter": 5000, "kinds": "rotational,residual,raw",
    "scan": 6, "engine": "smacof", "linkage": "average", "clusters": 2, "out": "pipeline_out",
}


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in PIPELINE_DEFAULTS:
                raise UsageError(f"{path}:{line_no}: unknown key {key!r}")
            cfg[key] = value
    return cfg


def _coerce(cfg: dict) -> dict:
    out = dict(PIPELINE_DEFAULTS)
    out.update(cfg)
    for key in ("n", "m", "N", "seed", "coords_dim", "max_iter", "scan", "clusters"):
        out[key] = int(out[key])
    for key in ("noise", "jitter", "k", "tol"):
        out[key] = float(out[key])
    if out["bandwidth"] not in (None, "", "none"):
        out["bandwidth"] = float(out["bandwidth"])
    else:
        out["bandwidth"] = None
    if isinstance(out["scaling"], str):
        out["scaling"] = out["scaling"].lower() in ("1", "true", "yes", "on")
    if isinstance(out["groups"], str):
        out["groups"] = _int_list(out["groups"]) if out["scheme"] == "grouped" else None
    out["kinds"] = [k.strip() for k in str(out["kinds"]).split(",") if k.strip()]
    return out


def run_pipeline(cfg: dict, threads: int = 1) -> dict:
    """simulate -> align -> dist -> mds -> cluster; returns a summary dict."""
    c = _coerce(cfg)
    out = Path(c["out"])
    spec = SimSpec(n=c["n"], m=c["m"], N=c["N"], noise_sd=c["noise"], rotation_scheme=c["scheme"],
                   groups=c["groups"], within_group_jitter=c["jitter"], coords_dim=c["coords_dim"],
                   seed=c["seed"])
    manifest = simulate_to(spec, out / "data")
    mset = load_dataset(manifest)
    acfg = align_config(c["method"], c["k"], c["bandwidth"], c["prior"], mset.coords is not None,
                        c["scaling"], True, c["tol"], c["max_iter"], threads=threads)
    res = run_align(mset, acfg, out / "align")
    truth_labels, groups = read_groups(out / "data" / "truth" / "groups.csv")
    summary = {"align": {"method": res.method, "iterations": res.n_iter, "converged": res.converged,
                         "objective": res.objective_history[-1]},
               "distances": {}}
    matrices = {}
    for kind in c["kinds"]:
        source = manifest if kind == "raw" else out / "align"
        dm, _ = compute_distance(source, kind, "squared")
        path = out / f"dist_{kind}.csv"
        write_distance_csv(path, dm)
        write_distance_meta(path, dm)
        matrices[kind] = dm
        emb, scan_rows, k = run_mds(dm, None, min(c["scan"], dm.n - 1), c["engine"], (1, 2), None,
                                    out / f"mds_{kind}")
        _, labels = run_cluster(dm, c["linkage"], c["clusters"], out / f"cluster_{kind}")
        summary["distances"][kind] = {
            "mds_dims": k,
            "stress1": emb.stress1,
            "scan": [[kk, s] for kk, s in scan_rows],
            "rand_index": rand_index(labels, groups),
        }
    corr = {}
    kinds = list(matrices)
    for i, ka in enumerate(kinds):
        for kb in kinds[i + 1:]:
            corr[f"{ka}~{kb}"] = pearson_upper(matrices[ka], matrices[kb])
    summary["correlations"] = corr
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def cmd_pipeline(a):
    cfg = read_config(a.config) if a.config else {}
    if a.out:
        cfg["out"] = a.out
    summary = run_pipeline(cfg, _threads(a))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if summary["align"]["converged"] else EXIT_WARN


# -- parser -------------------------------------------------------------------


def _threads(a):
    return a.threads if getattr(a, "threads", None) else env_threads()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="promal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic dataset from the perturbation model")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--scheme", choices=("identity", "random", "grouped"), default="random")
    s.add_argument("--groups", type=_int_list, default=None, help="group sizes, e.g. 6,6")
    s.add_argument("--jitter", type=float, default=0.05)
    s.add_argument("--scales", choices=("all_one", "random_range"), default="all_one")
    s.add_argument("--scale-range", type=_float_pair, default=(0.5, 2.0))
    s.add_argument("--translations", choices=("zero", "random_sd"), default="zero")
    s.add_argument("--translation-sd", type=float, default=1.0)
    s.add_argument("--coords-dim", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("align", help="align a dataset")
    s.add_argument("manifest")
    s.add_argument("--method", choices=("opp", "gpa", "promises", "efficient"), default="gpa")
    s.add_argument("--k", type=float, default=0.0, help="prior strength; 0 disables the prior")
    s.add_argument("--prior", choices=("auto", "identity", "similarity"), default="auto")
    s.add_argument("--bandwidth", type=float, default=None)
    s.add_argument("--no-scaling", action="store_true")
    s.add_argument("--no-centering", action="store_true")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--reference", choices=("mean", "first"), default="mean")
    s.add_argument("--rotation-only", action="store_true")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_align)

    s = sub.add_parser("dist", help="compute a distance matrix")
    s.add_argument("source", help="alignment directory, dataset manifest, or distance CSV")
    s.add_argument("--kind", choices=("residual", "rotational", "raw"), default="residual")
    s.add_argument("--form", choices=("squared", "root"), default="squared")
    s.add_argument("--no-center", action="store_true", help="raw distances on uncentered matrices")
    s.add_argument("--compare", default=None, help="distance CSV to correlate against")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("mds", help="multidimensional scaling of a distance CSV")
    s.add_argument("distance")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--dims", type=int, default=None)
    g.add_argument("--scan", type=int, default=None, metavar="K_MAX")
    s.add_argument("--engine", choices=("classical", "smacof"), default="smacof")
    s.add_argument("--plot-dims", type=_int_pair, default=(1, 2))
    s.add_argument("--color-by", default=None, help="CSV label,<covariates...>")
    s.add_argument("--color-column", default=None)
    s.add_argument("--out", required=True, help="output prefix")
    s.set_defaults(func=cmd_mds)

    s = sub.add_parser("cluster", help="hierarchical clustering of a distance CSV")
    s.add_argument("distance")
    s.add_argument("--linkage", choices=LINKAGES, default="average")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--truth", default=None, help="groups CSV (label,group) to score against")
    s.add_argument("--out", required=True, help="output prefix")
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("pipeline", help="simulate, align, dist, mds and cluster in one go")
    s.add_argument("--config", default=None, help="flat 'key = value' file")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        code = EXIT_OK if exc.code in (0, None) else EXIT_ERROR
        print(f"STATUS: {'ok' if code == EXIT_OK else 'error usage'}", file=sys.stderr)
        return code
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        code = a.func(a)
    except (PromalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"STATUS: error {type(exc).__name__}", file=sys.stderr)
        return EXIT_ERROR
    print(f"STATUS: {'ok' if code == EXIT_OK else 'warning'}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
