"""Command-line harness: train, attribute, benchmark, axioms.

All commands read an optional JSON config (RunConfig fields) and accept a
few overriding flags. Exit codes: 0 success, 2 usage/config error, 1
runtime failure. Outputs are deterministic: rerunning a command with the
same config produces byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import datasets, harness, metrics, nets, paths, svgplot
from .harness import RunConfig

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class UsageError(Exception):
    pass


def _load_config(args):
    doc = {}
    if args.config:
        if not os.path.isfile(args.config):
            raise UsageError(f"config file not found: {args.config}")
        with open(args.config) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"bad config JSON: {exc}") from exc
    if args.seed is not None:
        doc["data_seed"] = args.seed
        doc["model_seed"] = args.seed
    if getattr(args, "methods", None):
        doc["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        config = RunConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    from .methods import METHOD_TAGS

    for m in config.methods:
        if m not in METHOD_TAGS:
            raise UsageError(f"unknown method tag {m!r}")
    return config


def _out_dir(args):
    if not os.path.isdir(args.out):
        raise UsageError(f"output directory does not exist: {args.out}")
    return args.out


def _fmt(v):
    return f"{v:.17g}"


def cmd_train(args):
    config = _load_config(args)
    out = _out_dir(args)
    model, report, _, test_set, test_acc = harness.train_moons_model(config)
    nets.save_model(model, os.path.join(out, "model.json"))
    with open(os.path.join(out, "train_report.csv"), "w") as fh:
        fh.write("train_accuracy,test_accuracy,final_loss,epochs,seed\n")
        fh.write(f"{_fmt(report.train_accuracy)},{_fmt(test_acc)},"
                 f"{_fmt(report.final_loss)},{report.epochs},{report.seed}\n")
    datasets.save_csv(test_set, os.path.join(out, "test_set.csv"))
    print(f"train_accuracy={report.train_accuracy:.4f} "
          f"test_accuracy={test_acc:.4f} loss={report.final_loss:.6f}")
    return 0


def _load_model_and_test(args, config):
    if not os.path.isfile(args.model):
        raise UsageError(f"model file not found: {args.model}")
    model = nets.load_model(args.model)
    test_csv = os.path.join(os.path.dirname(args.model) or ".", "test_set.csv")
    if os.path.isfile(test_csv):
        test_set = datasets.load_csv(test_csv)
    else:
        ds = datasets.make_moons(config.n_points, config.noise, config.data_seed)
        _, test_set = datasets.split(ds, config.train_fraction, config.data_seed)
    return model, test_set


def cmd_attribute(args):
    config = _load_config(args)
    out = _out_dir(args)
    model, test_set = _load_model_and_test(args, config)
    n = len(test_set)
    for method in config.methods:
        params = config.method_params.get(method, {})
        k = int(params.get("k", config.knn_k))
        if method in ("geodesic_knn", "enhanced_ig") and k >= n + 1:
            raise UsageError(f"k={k} invalid for {n} test points")
    for method in config.methods:
        attrs = harness.attribute_test_set(
            method, model, test_set.points, config.baseline, config,
            seed=config.data_seed,
        )
        paths.save_attributions_csv(
            os.path.join(out, f"attributions_{method}.csv"),
            [(i, a, method) for i, a in enumerate(attrs)],
        )
        print(f"{method}: wrote {n} attributions")
    return 0


def cmd_benchmark(args):
    config = _load_config(args)
    out = _out_dir(args)
    result = harness.run_benchmark(config)
    with open(os.path.join(out, "purity.csv"), "w") as fh:
        fh.write("method,noise,seed,purity\n")
        for method in config.methods:
            for noise in config.noise_grid:
                for seed in config.seeds:
                    fh.write(f"{method},{_fmt(noise)},{seed},"
                             f"{_fmt(result.purity[(method, noise, seed)])}\n")
    with open(os.path.join(out, "summary.csv"), "w") as fh:
        fh.write("method,auc_purity,stderr\n")
        for method in config.methods:
            fh.write(f"{method},{_fmt(result.auc_mean[method])},"
                     f"{_fmt(result.auc_stderr[method])}\n")
    if config.figures:
        _benchmark_figures(config, result, out)
    for method in config.methods:
        print(f"{method}: auc_purity={result.auc_mean[method]:.4f} "
              f"+- {result.auc_stderr[method]:.4f}")
    return 0


def _benchmark_figures(config, result, out):
    series = {}
    for method in config.methods:
        means, errs = [], []
        for noise in config.noise_grid:
            vals = np.array([result.purity[(method, noise, s)]
                             for s in config.seeds])
            means.append(vals.mean())
            errs.append(vals.std(ddof=1) / np.sqrt(len(vals))
                        if len(vals) > 1 else 0.0)
        series[method] = (means, errs)
    svgplot.curves_svg(
        os.path.join(out, "purity_vs_noise.svg"),
        config.noise_grid, series,
        title="Purity vs dataset noise", xlabel="noise sigma", ylabel="purity",
    )
    # per-method attribution heatmaps at the config's reference noise/seed
    model, _, _, test_set, _ = harness.train_moons_model(
        config, config.noise, config.seeds[0]
    )
    for method in config.methods:
        attrs = harness.attribute_test_set(
            method, model, test_set.points, config.baseline, config,
            seed=config.seeds[0],
        )
        score = [float(np.abs(a.values).sum()) for a in attrs]
        svgplot.scatter_heatmap_svg(
            os.path.join(out, f"heatmap_abs_{method}.svg"),
            test_set.points, score,
            title=f"{method}: sum of |attribution|",
        )
        total = [float(np.sum(a.values)) for a in attrs]
        svgplot.scatter_heatmap_svg(
            os.path.join(out, f"heatmap_sum_{method}.svg"),
            test_set.points, total,
            title=f"{method}: sum of attribution",
        )


def cmd_axioms(args):
    config = _load_config(args)
    out = _out_dir(args)
    model, test_set = _load_model_and_test(args, config)
    rows, ref = harness.residual_report(config, model, test_set.points)
    with open(os.path.join(out, "axiom_residuals.csv"), "w") as fh:
        fh.write("method,completeness_median,completeness_p95,"
                 "strong_median,strong_p95\n")
        for row in rows:
            fh.write(f"{row['method']},{_fmt(row['completeness_median'])},"
                     f"{_fmt(row['completeness_p95'])},"
                     f"{_fmt(row['strong_median'])},{_fmt(row['strong_p95'])}\n")
    with open(os.path.join(out, "outcome_diff.csv"), "w") as fh:
        fh.write("input_id,abs_f_diff\n")
        for i, v in enumerate(ref):
            fh.write(f"{i},{_fmt(v)}\n")
    for row in rows:
        print(f"{row['method']}: completeness_median="
              f"{row['completeness_median']:.3e} "
              f"strong_median={row['strong_median']:.3e}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="geoattr",
        description="Geodesic path attributions and the half-moons harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_model in (
        ("train", cmd_train, False),
        ("attribute", cmd_attribute, True),
        ("benchmark", cmd_benchmark, False),
        ("axioms", cmd_axioms, True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True, help="existing output directory")
        p.add_argument("--methods", default=None,
                       help="comma-separated method tags (overrides config)")
        if needs_model:
            p.add_argument("--model", required=True, help="model JSON file")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
