"""Command-line front end: ``spatialcv {synth,partition,run,report}``."""

import argparse
import csv
import logging
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import experiment as ex
from ._seeding import rng_for
from .dataset import DataError, Dataset, load_csv, read_schema, write_csv, write_schema
from .kvconfig import ConfigError, read_kv, split_list
from .partition import (PartitionError, PartitionSpec, SPATIAL, make_folds, strategy_name,
                        write_centroids_csv, write_folds_csv)
from .synth import FieldSpec, make_classification

log = logging.getLogger("spatialcv")

BUNDLED = ("paper-desk", "paper-full", "saturation", "null")

_YES = {"1", "yes", "true", "on"}
_NO = {"0", "no", "false", "off"}


class CliError(Exception):
    pass


# -- run configuration ----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    experiment: ex.ExperimentConfig
    synth: Optional[FieldSpec] = None
    data_path: Optional[Path] = None
    schema_path: Optional[Path] = None
    permute_labels: bool = False
    output: Optional[Path] = None

    def load_dataset(self) -> Dataset:
        if self.synth is not None:
            ds = make_classification(self.synth)
        else:
            ds = load_csv(self.data_path, read_schema(self.schema_path))
        if self.permute_labels:
            rng = rng_for("permute", self.experiment.master_seed)
            ds = ds.with_labels(rng.permutation(ds.labels))
        return ds


def _flag(kv, key, default=False):
    value = kv.get(key)
    if value is None:
        return default
    if value.lower() in _YES:
        return True
    if value.lower() in _NO:
        return False
    raise ConfigError(f"{kv.source}: '{key}' must be yes or no, got {value!r}")


def _num(kv, key, cast, default):
    value = kv.get(key)
    if value is None:
        return default
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"{kv.source}: '{key}' is not a valid {cast.__name__}: {value!r}") from None


def _values(kv, key):
    out = []
    for v in kv.get_all(key):
        out.extend(split_list(v))
    return out


def resolve_config_path(name) -> Path:
    """A config file path, or the name of a bundled config such as ``paper-desk``."""
    path = Path(name)
    if path.exists():
        return path
    stem = path.name[:-4] if path.name.endswith(".cfg") else path.name
    if stem in BUNDLED and path.parent == Path("."):
        return Path(str(resources.files("spatialcv") / "configs" / f"{stem}.cfg"))
    raise CliError(f"config {name} not found (bundled configs: {', '.join(BUNDLED)})")


def parse_run_config(path, seed: Optional[int] = None) -> RunConfig:
    path = resolve_config_path(path)
    kv = read_kv(path)
    known = {"seed", "budget", "learner", "setup", "cv.k_outer", "cv.k_inner", "cv.repetitions",
             "data.path", "data.schema", "data.permute_labels", "output",
             "synth.n", "synth.extent", "synth.range", "synth.sill", "synth.nugget",
             "synth.informative", "synth.noise", "synth.intercept", "synth.seed"}
    unknown = [k for k in kv.keys() if k not in known]
    if unknown:
        raise ConfigError(f"{kv.source}: unknown keys {unknown}")
    base = path.parent
    master = seed if seed is not None else _num(kv, "seed", int, 0)
    try:
        cfg = ex.ExperimentConfig(
            k_outer=_num(kv, "cv.k_outer", int, 5),
            repetitions=_num(kv, "cv.repetitions", int, 100),
            budgets=tuple(int(b) for b in _values(kv, "budget")) or (0,),
            learners=tuple(_values(kv, "learner")) or ex.learners.KINDS,
            setups=tuple(ex.CvSetup.parse(s) for s in _values(kv, "setup")) or (ex.NS_NS, ex.S_S),
            master_seed=master,
            k_inner=_num(kv, "cv.k_inner", int, 5))
    except ValueError as exc:
        raise ConfigError(f"{kv.source}: {exc}") from None
    has_path = kv.get("data.path") is not None
    has_synth = any(k.startswith("synth.") for k in kv.keys())
    if has_path == has_synth:
        raise ConfigError(f"{kv.source}: give either data.path or synth.* keys, not both or neither")
    synth = data = schema = None
    if has_synth:
        extent = tuple(float(v) for v in split_list(kv.get("synth.extent", "1,1")))
        try:
            synth = FieldSpec(n=_num(kv, "synth.n", int, 600), extent=extent,
                              range=_num(kv, "synth.range", float, 0.3),
                              sill=_num(kv, "synth.sill", float, 0.8),
                              nugget=_num(kv, "synth.nugget", float, 0.0),
                              n_informative=_num(kv, "synth.informative", int, 3),
                              n_noise=_num(kv, "synth.noise", int, 2),
                              intercept=_num(kv, "synth.intercept", float, -1.1),
                              seed=_num(kv, "synth.seed", int, 0))
        except ValueError as exc:
            raise ConfigError(f"{kv.source}: {exc}") from None
    else:
        data = base / kv.get("data.path")
        schema = base / kv.get("data.schema", str(Path(kv.get("data.path")).with_suffix(".schema")))
        for p in (data, schema):
            if not p.exists():
                raise ConfigError(f"{kv.source}: file {p} does not exist")
    out = kv.get("output")
    return RunConfig(cfg, synth, data, schema, _flag(kv, "data.permute_labels"),
                     None if out is None else base / out)


# -- formatting -----------------------------------------------------------------

def _fmt(v, digits=3):
    return "NA" if v is None or (isinstance(v, float) and np.isnan(v)) else f"{v:.{digits}f}"


def format_matrix(result: ex.ExperimentResult) -> str:
    s = ex.summary(result)["overall_mean_auroc"]
    cols = sorted({(l, int(b)) for rows in s.values() for l, bs in rows.items() for b in bs},
                  key=lambda c: (ex.learners.KINDS.index(c[0]) if c[0] in ex.learners.KINDS else 99, c[1]))
    width = max([len("setup")] + [len(k) for k in s]) + 2
    head = "setup".ljust(width) + "".join(f"{l}@{b}".rjust(10) for l, b in cols)
    lines = [head]
    for setup in sorted(s):
        cells = [s[setup].get(l, {}).get(str(b)) for l, b in cols]
        lines.append(setup.ljust(width) + "".join(
            ("-" if (l not in s[setup] or str(b) not in s[setup][l]) else _fmt(v)).rjust(10)
            for (l, b), v in zip(cols, cells)))
    return "\n".join(lines)


def optimism_rows(result: ex.ExperimentResult) -> List[ex.Optimism]:
    """Optimism for every learner and budget where a non-spatial/spatial pair exists."""
    have = set(result.cells())
    rows = []
    for ns, sp in ((ex.NS_NS, ex.S_S), (ex.NS_NONE, ex.S_NONE)):
        for _, learner, budget in sorted(c for c in have if c[0] == ns.name):
            if (sp.name, learner, budget) in have:
                try:
                    rows.append((ns.name, sp.name, ex.optimism(result, learner, budget, ns, sp)))
                except ValueError:
                    continue
    return rows


def _write_table(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# -- commands -------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = FieldSpec(n=args.n, extent=tuple(args.extent), range=args.range, sill=args.sill,
                     nugget=args.nugget, n_informative=args.informative, n_noise=args.noise,
                     intercept=args.intercept, seed=args.seed)
    ds = make_classification(spec)
    out = Path(args.out)
    write_csv(ds, out)
    schema = out.with_suffix(".schema")
    write_schema(ds.schema, schema)
    print(f"wrote {out} and {schema}: n={ds.n} prevalence={ds.labels.mean():.3f}")
    return 0


def cmd_partition(args) -> int:
    schema = Path(args.schema) if args.schema else Path(args.data).with_suffix(".schema")
    ds = load_csv(args.data, read_schema(schema))
    spec = PartitionSpec(args.k, args.reps, strategy_name(args.strategy), args.seed)
    assign = make_folds(ds.coords, spec)
    write_folds_csv(assign, args.out)
    msg = f"wrote {args.out}"
    if spec.strategy == SPATIAL:
        cpath = args.centroids or str(Path(args.out).with_name(Path(args.out).stem + "_centroids.csv"))
        write_centroids_csv(assign, cpath)
        msg += f" and {cpath}"
    sizes = assign.fold_sizes(0)
    print(f"{msg}; repetition 0 fold sizes: {' '.join(str(int(s)) for s in sizes)}")
    return 0


def _progress(stream):
    start = time.perf_counter()
    last = [0.0]

    def report(done, total):
        now = time.perf_counter()
        if done == total or now - last[0] > 30:
            last[0] = now
            print(f"[{done}/{total}] {now - start:.0f}s", file=stream, flush=True)
    return report


def cmd_run(args) -> int:
    rc = parse_run_config(args.config, seed=args.seed)
    out = Path(args.out) if args.out else rc.output
    if out is None:
        raise CliError("no output directory: pass --out or set 'output' in the config")
    out.mkdir(parents=True, exist_ok=True)
    ds = rc.load_dataset()
    result = ex.run_experiment(ds, rc.experiment, jobs=args.jobs,
                               progress=None if args.quiet else _progress(sys.stderr))
    ex.write_results_csv(result, out / "results.csv")
    ex.write_summary_json(result, out / "summary.json")
    ex.write_curve_csv(result, out / "tuning_curve.csv")
    print(format_matrix(result))
    print(f"leakage checks: {result.leakage_checks}, violations: {result.leakage_violations}")
    empty = ex.empty_cells(result)
    if empty:
        for setup, learner, budget in empty:
            print(f"error: no successful fold for {setup} {learner} budget {budget}", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    result = ex.read_results_csv(args.results)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    status = 0
    if args.curve:
        learner, setup = args.curve
        try:
            curve = ex.tuning_curve(result, ex.learners.learner_kind(learner), setup)
        except ValueError as exc:
            print(f"tuning curve: {exc}", file=sys.stderr)
            return 1
        curves = [(setup, learner.upper(), curve)]
    else:
        curves = []
        for setup, learner in sorted({(s, l) for s, l, _ in result.cells()}):
            try:
                curves.append((setup, learner, ex.tuning_curve(result, learner, setup)))
            except ValueError:
                continue
    print("tuning curve (budget, mean AUROC, IQR of repetition means)")
    if not curves:
        print("  insufficient budgets: every (setup, learner) has fewer than 2 budgets")
    curve_rows = [(s, l, p.budget, p.mean_auroc, p.iqr) for s, l, c in curves for p in c]
    for s, l, b, m, q in curve_rows:
        print(f"  {s:<26}{l:<6}{b:>6}  {m:.3f}  {q:.3f}")
    box = ex.boxplot_table(result)
    print("repetition-mean AUROC (min, q1, median, q3, max)")
    for r in box:
        print(f"  {r.setup:<26}{r.learner:<6}{r.budget:>6}  " + "  ".join(
            f"{v:.3f}" for v in (r.minimum, r.q1, r.median, r.q3, r.maximum)))
    opt = optimism_rows(result)
    print("optimism (non-spatial minus spatial; relative to each baseline in %)")
    for ns, sp, o in opt:
        print(f"  {o.learner:<6}{o.budget:>6}  {o.nonspatial:.3f} vs {o.spatial:.3f}  "
              f"diff {o.difference:+.3f}  {o.relative_to_nonspatial:+.1f}% of non-spatial  "
              f"{o.relative_to_spatial:+.1f}% of spatial  [{ns} vs {sp}]")
    if out:
        _write_table(out / "tuning_curve.csv", ["setup", "learner", "budget", "mean_auroc", "iqr"],
                     [(s, l, b, repr(m), repr(q)) for s, l, b, m, q in curve_rows])
        _write_table(out / "boxplot.csv", ["setup", "learner", "budget", "min", "q1", "median", "q3", "max"],
                     [(r.setup, r.learner, r.budget) + tuple(repr(v) for v in
                      (r.minimum, r.q1, r.median, r.q3, r.maximum)) for r in box])
        _write_table(out / "optimism.csv",
                     ["nonspatial_setup", "spatial_setup", "learner", "budget", "auroc_nonspatial",
                      "auroc_spatial", "difference", "relative_to_nonspatial_pct",
                      "relative_to_spatial_pct"],
                     [(ns, sp, o.learner, o.budget) + tuple(repr(v) for v in (
                         o.nonspatial, o.spatial, o.difference, o.relative_to_nonspatial,
                         o.relative_to_spatial)) for ns, sp, o in opt])
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (run: overrides the config; synth/partition default 0)")
    common.add_argument("-v", "--verbose", action="store_true", help="log warnings from learners")
    p = argparse.ArgumentParser(prog="spatialcv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="simulate an autocorrelated dataset")
    s.add_argument("--n", type=int, default=600)
    s.add_argument("--extent", type=float, nargs=2, default=(1.0, 1.0), metavar=("W", "H"))
    s.add_argument("--range", type=float, default=0.3)
    s.add_argument("--sill", type=float, default=0.8)
    s.add_argument("--nugget", type=float, default=0.0)
    s.add_argument("--informative", type=int, default=3)
    s.add_argument("--noise", type=int, default=2)
    s.add_argument("--intercept", type=float, default=-1.1)
    s.add_argument("--out", required=True, help="dataset CSV; the schema goes next to it")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("partition", parents=[common], help="write repeated k-fold assignments")
    s.add_argument("--data", required=True)
    s.add_argument("--schema", help="defaults to the data path with a .schema suffix")
    s.add_argument("--strategy", required=True, choices=["random", "spatial", "non-spatial",
                                                         "spatial_kmeans"])
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--centroids", help="centroid CSV for the spatial strategy")
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("run", parents=[common], help="run a nested cross-validation experiment")
    s.add_argument("config", help=f"config file or bundled name ({', '.join(BUNDLED)})")
    s.add_argument("--out", help="output directory (overrides 'output' in the config)")
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("report", parents=[common], help="plot-ready tables from a results CSV")
    s.add_argument("results")
    s.add_argument("--out", help="directory for tuning_curve.csv, boxplot.csv and optimism.csv")
    s.add_argument("--curve", nargs=2, metavar=("LEARNER", "SETUP"),
                   help="only the tuning curve of one learner under one setup")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in ("synth", "partition") and args.seed is None:
        args.seed = 0
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (CliError, ConfigError, DataError, PartitionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
