"""Command-line surface.

Every analysis subcommand prints a JSON summary to stdout and writes CSV
artifacts into the output directory (env ``TRIAGEVAL_OUT`` supplies the
default). Exit codes: 0 success, 1 data error (with a machine-readable error
JSON on stdout), 2 usage error. Artifact writes go through a temp file and
an atomic rename, so a failed run never leaves a half-written report.
"""

import json
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import click

from . import curves, framework, strata, synth, thresholds
from .anonymizer import load_rules, run_batch
from .data_model import (
    BinaryClassification,
    IngestOptions,
    cohort_summary,
    cohort_to_csv,
    parse_cohort,
)
from .dicomio import DicomError
from .errors import TriagevalError
from .stats import delong_ci, delong_compare
from .synth import BinormalSpec, PriorTbMixSpec

SCHEMA_VERSION = 1


def main(argv=None):
    try:
        return cli(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        sys.exit(2)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        sys.exit(1)
    except (TriagevalError, DicomError, OSError) as exc:
        _emit({"error": {"type": type(exc).__name__, "message": str(exc)}})
        sys.exit(1)


@click.group()
def cli():
    """Evaluation toolkit for score-based triage classifiers."""


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _write_atomic(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, os.path.join(out_dir, name))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return name


def _slug(product: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", product)


def _load_cohort(input_path: str, score_scale: str, product_scale):
    overrides = dict(kv.split("=", 1) for kv in product_scale) if product_scale else None
    opts = IngestOptions(score_scale=score_scale, per_product_scale=overrides)
    if input_path == "-":
        return parse_cohort(sys.stdin, opts)
    with open(input_path, newline="") as fh:
        return parse_cohort(fh, opts)


def _select_products(cohort, products_opt):
    if not products_opt:
        return list(cohort.product_names)
    requested = [p.strip() for p in products_opt.split(",") if p.strip()]
    unknown = [p for p in requested if p not in cohort.product_names]
    if unknown:
        raise click.UsageError(f"unknown product(s): {', '.join(unknown)}")
    return requested


_in = click.option("--input", "input_path", required=True, help="cohort CSV, or - for stdin")
_out = click.option(
    "--out",
    "out_dir",
    envvar="TRIAGEVAL_OUT",
    required=True,
    help="artifact directory (env TRIAGEVAL_OUT)",
)
_level = click.option("--level", default=0.95, show_default=True, help="confidence level")
_scale = click.option(
    "--score-scale",
    default="unit",
    type=click.Choice(["unit", "percent"]),
    show_default=True,
    help="declared scale of every score column",
)
_pscale = click.option(
    "--product-scale",
    multiple=True,
    metavar="NAME=SCALE",
    help="per-product scale override, repeatable",
)
_products = click.option("--products", default=None, help="comma-separated product filter")


def _ci_row(ci):
    if ci is None:
        return ["", "", ""]
    return [repr(ci.estimate), repr(ci.lower), repr(ci.upper)]


def _csv_text(header, rows) -> str:
    import csv as _csv
    import io as _io

    buf = _io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _tpp_rows(product, verdict):
    rows = []
    for kind, target, point in (
        ("sensitivity", thresholds.TPP_SENSITIVITY, verdict.point_at_sens90),
        ("specificity", thresholds.TPP_SPECIFICITY, verdict.point_at_spec70),
    ):
        rows.append(
            [product, kind, repr(target), repr(point.threshold)]
            + _ci_row(point.sensitivity)
            + _ci_row(point.specificity)
            + [point.approximate, verdict.met]
        )
    return rows


_TPP_HEADER = [
    "product", "target_kind", "target", "threshold",
    "sensitivity", "sensitivity_lo", "sensitivity_hi",
    "specificity", "specificity_lo", "specificity_hi",
    "approximate", "met",
]

_HUMAN_HEADER = [
    "classification", "reader", "threshold_score",
    "sensitivity", "sensitivity_lo", "sensitivity_hi",
    "specificity", "specificity_lo", "specificity_hi",
    "ppv", "ppv_lo", "ppv_hi",
    "npv", "npv_lo", "npv_hi",
    "delta_specificity", "delta_specificity_lo", "delta_specificity_hi",
    "delta_ppv", "delta_ppv_lo", "delta_ppv_hi",
    "delta_npv", "delta_npv_lo", "delta_npv_hi",
    "mcnemar_statistic", "mcnemar_p",
]


def _human_rows(comparison, product):
    human = comparison.human
    ai = comparison.matched_ai
    blank = ["", "", ""]
    rows = [
        [comparison.classification.value, "radiologists", ""]
        + _ci_row(human.sensitivity) + _ci_row(human.specificity)
        + _ci_row(human.ppv) + _ci_row(human.npv)
        + blank + blank + blank + ["", ""],
        [comparison.classification.value, product, repr(ai.threshold)]
        + _ci_row(ai.sensitivity) + _ci_row(ai.specificity)
        + _ci_row(ai.ppv) + _ci_row(ai.npv)
        + _ci_row(comparison.delta_specificity)
        + _ci_row(comparison.delta_ppv)
        + _ci_row(comparison.delta_npv)
        + [repr(comparison.mcnemar_specificity.statistic), repr(comparison.mcnemar_specificity.p_value)],
    ]
    return rows


@cli.command()
@_in
@_out
@_level
@_scale
@_pscale
@_products
@click.option("--grid-size", default=None, type=int, help="uniform sweep grid size (default: exact distinct scores)")
@click.option("--workers", default=4, show_default=True, help="parallel per-product analyses")
def evaluate(input_path, out_dir, level, score_scale, product_scale, products, grid_size, workers):
    """Full report: AUC/PRAUC, TPP, human comparison, framework sweeps, curves."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    names = _select_products(cohort, products)
    labels = cohort.labels
    grid = framework.uniform_grid(grid_size) if grid_size else None

    def analyze(product):
        scores = cohort.scores_for(product)
        return {
            "auc": delong_ci(scores, labels, level),
            "prauc": curves.prauc(scores, labels),
            "tpp": thresholds.tpp_check(scores, labels, level),
            "sweep": framework.framework_sweep(scores, labels, grid=grid, level=level, product=product),
            "roc": curves.roc_curve(scores, labels),
            "pr": curves.pr_curve(scores, labels),
        }

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        analyses = dict(zip(names, pool.map(analyze, names)))

    artifacts = []
    auc_rows = []
    tpp_rows = []
    summary_products = {}
    for product in names:
        res = analyses[product]
        auc_rows.append(
            [product] + _ci_row(res["auc"]) + [repr(level), repr(res["prauc"]),
             res["roc"].n_pos, res["roc"].n_neg]
        )
        tpp_rows.extend(_tpp_rows(product, res["tpp"]))
        slug = _slug(product)
        artifacts.append(_write_atomic(out_dir, f"framework_{slug}.csv", framework.sweep_to_csv(res["sweep"])))
        artifacts.append(_write_atomic(out_dir, f"roc_{slug}.csv", curves.curve_to_csv(res["roc"])))
        artifacts.append(_write_atomic(out_dir, f"pr_{slug}.csv", curves.curve_to_csv(res["pr"])))
        summary_products[product] = {
            "auc": res["auc"].as_dict(),
            "prauc": res["prauc"],
            "tpp_met": res["tpp"].met,
            "threshold_at_sens90": res["tpp"].point_at_sens90.threshold,
        }
    artifacts.append(
        _write_atomic(
            out_dir,
            "auc.csv",
            _csv_text(
                ["product", "auc", "auc_lo", "auc_hi", "level", "prauc", "n_pos", "n_neg"],
                auc_rows,
            ),
        )
    )
    artifacts.append(_write_atomic(out_dir, "tpp.csv", _csv_text(_TPP_HEADER, tpp_rows)))

    pairwise = {}
    if len(names) >= 2:
        compare_rows = []
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                result = delong_compare(
                    cohort.scores_for(a), cohort.scores_for(b), labels, paired=True
                )
                compare_rows.append([a, b, repr(result.statistic), repr(result.p_value), result.method])
                pairwise[f"{a}|{b}"] = result.p_value
        artifacts.append(
            _write_atomic(
                out_dir,
                "compare.csv",
                _csv_text(["product_a", "product_b", "statistic", "p_value", "method"], compare_rows),
            )
        )

    graded = all(rec.radiologist_grade is not None for rec in cohort.records)
    if graded and len(cohort) > 0:
        human_rows = []
        for classification in BinaryClassification:
            for product in names:
                comparison = thresholds.human_vs_ai(cohort, product, classification, level)
                human_rows.extend(_human_rows(comparison, product))
        artifacts.append(
            _write_atomic(out_dir, "human_comparison.csv", _csv_text(_HUMAN_HEADER, human_rows))
        )

    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": "evaluate",
        "level": level,
        "n": len(cohort),
        "n_pos": cohort.n_pos,
        "n_neg": cohort.n_neg,
        "prevalence": cohort.n_pos / len(cohort) if len(cohort) else None,
        "products": summary_products,
        "pairwise_auc_p": pairwise,
        "human_comparison_included": graded,
        "artifacts": sorted(artifacts),
    }
    artifacts.append(_write_atomic(out_dir, "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n"))
    _emit(summary)


@cli.command()
@_in
@_out
@_level
@_scale
@_pscale
@_products
def roc(input_path, out_dir, level, score_scale, product_scale, products):
    """ROC curves and DeLong AUC intervals."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    names = _select_products(cohort, products)
    summary = {"schema_version": SCHEMA_VERSION, "command": "roc", "products": {}, "artifacts": []}
    for product in names:
        scores = cohort.scores_for(product)
        curve = curves.roc_curve(scores, cohort.labels)
        ci = delong_ci(scores, cohort.labels, level)
        name = _write_atomic(out_dir, f"roc_{_slug(product)}.csv", curves.curve_to_csv(curve))
        summary["products"][product] = {"auc": ci.as_dict(), "points": len(curve.points)}
        summary["artifacts"].append(name)
    summary["artifacts"].sort()
    _emit(summary)


@cli.command()
@_in
@_out
@_scale
@_pscale
@_products
def prc(input_path, out_dir, score_scale, product_scale, products):
    """Precision-recall curves and PRAUC."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    names = _select_products(cohort, products)
    summary = {"schema_version": SCHEMA_VERSION, "command": "prc", "products": {}, "artifacts": []}
    for product in names:
        scores = cohort.scores_for(product)
        curve = curves.pr_curve(scores, cohort.labels)
        name = _write_atomic(out_dir, f"pr_{_slug(product)}.csv", curves.curve_to_csv(curve))
        summary["products"][product] = {
            "prauc": curves.prauc(scores, cohort.labels),
            "baseline": curve.baseline,
        }
        summary["artifacts"].append(name)
    summary["artifacts"].sort()
    _emit(summary)


@cli.command()
@_in
@_out
@_level
@_scale
@_pscale
@_products
def compare(input_path, out_dir, level, score_scale, product_scale, products):
    """Pairwise paired DeLong AUC comparison matrix."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    names = _select_products(cohort, products)
    if len(names) < 2:
        raise click.UsageError("pairwise comparison needs at least 2 products")
    labels = cohort.labels
    rows = []
    matrix = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            result = delong_compare(cohort.scores_for(a), cohort.scores_for(b), labels, paired=True)
            rows.append([a, b, repr(result.statistic), repr(result.p_value), result.method])
            matrix[f"{a}|{b}"] = result.p_value
    name = _write_atomic(
        out_dir, "compare.csv",
        _csv_text(["product_a", "product_b", "statistic", "p_value", "method"], rows),
    )
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "compare",
        "level": level,
        "pairwise_auc_p": matrix,
        "artifacts": [name],
    })


@cli.command("match-human")
@_in
@_out
@_level
@_scale
@_pscale
@click.option("--product", required=True)
@click.option("--classification", type=click.Choice(["A", "B", "C"]), required=True)
def match_human(input_path, out_dir, level, score_scale, product_scale, product, classification):
    """Human-vs-AI comparison at matched sensitivity for one classification."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    if product not in cohort.product_names:
        raise click.UsageError(f"unknown product {product!r}")
    comparison = thresholds.human_vs_ai(cohort, product, BinaryClassification(classification), level)
    name = _write_atomic(
        out_dir,
        f"human_comparison_{_slug(product)}_{classification}.csv",
        _csv_text(_HUMAN_HEADER, _human_rows(comparison, product)),
    )
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "match-human",
        "comparison": comparison.as_dict(),
        "artifacts": [name],
    })


@cli.command()
@_in
@_out
@_level
@_scale
@_pscale
@_products
def tpp(input_path, out_dir, level, score_scale, product_scale, products):
    """Target-product-profile check per product."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    names = _select_products(cohort, products)
    rows = []
    summary = {}
    for product in names:
        verdict = thresholds.tpp_check(cohort.scores_for(product), cohort.labels, level)
        rows.extend(_tpp_rows(product, verdict))
        summary[product] = verdict.as_dict()
    name = _write_atomic(out_dir, "tpp.csv", _csv_text(_TPP_HEADER, rows))
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "tpp",
        "products": summary,
        "artifacts": [name],
    })


@cli.command("framework")
@_in
@_out
@_level
@_scale
@_pscale
@_products
@click.option("--grid-size", default=None, type=int, help="uniform grid size (default: exact distinct scores)")
def framework_cmd(input_path, out_dir, level, score_scale, product_scale, products, grid_size):
    """Sensitivity / tests-saved / NNT sweep per product."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    names = _select_products(cohort, products)
    grid = framework.uniform_grid(grid_size) if grid_size else None
    artifacts = []
    for product in names:
        sweep = framework.framework_sweep(
            cohort.scores_for(product), cohort.labels, grid=grid, level=level, product=product
        )
        artifacts.append(
            _write_atomic(out_dir, f"framework_{_slug(product)}.csv", framework.sweep_to_csv(sweep))
        )
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "framework",
        "products": names,
        "artifacts": sorted(artifacts),
    })


@cli.command()
@_in
@_out
@_level
@_scale
@_pscale
@click.option("--product", required=True)
@click.option(
    "--covariate",
    type=click.Choice(list(strata.COVARIATES)),
    required=True,
)
@click.option("--seed", type=int, required=True, help="bootstrap seed")
@click.option("--replicates", default=strata.DEFAULT_PRAUC_REPLICATES, show_default=True)
def subgroups(input_path, out_dir, level, score_scale, product_scale, product, covariate, seed, replicates):
    """Stratified AUC/PRAUC with a pairwise significance matrix."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    if product not in cohort.product_names:
        raise click.UsageError(f"unknown product {product!r}")
    report = strata.subgroup_report(
        cohort, product, covariate, level=level, prauc_replicates=replicates, seed=seed
    )
    payload = report.as_dict()
    name = _write_atomic(
        out_dir,
        f"subgroups_{_slug(product)}_{covariate}.json",
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "subgroups",
        "report": payload,
        "artifacts": [name],
    })


@cli.command()
@_in
@_out
@_scale
@_pscale
@click.option("--product", required=True)
@click.option("--bins", default=20, show_default=True)
def density(input_path, out_dir, score_scale, product_scale, product, bins):
    """Score histograms per reference-label x prior-TB cell."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    if product not in cohort.product_names:
        raise click.UsageError(f"unknown product {product!r}")
    summary = strata.density_hist(cohort, product, bins)
    name = _write_atomic(out_dir, f"density_{_slug(product)}.csv", strata.density_to_csv(summary))
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "density",
        "summary": summary.as_dict(),
        "artifacts": [name],
    })


@cli.command("synth")
@click.option("--mu", type=float, required=True, help="latent mean separation")
@click.option("--prevalence", type=float, required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--squash", type=click.Choice(["logistic", "none"]), default="logistic", show_default=True)
@click.option("--product-name", default="synthetic", show_default=True)
@click.option("--prior-tb-fraction", type=float, default=None, help="flagged fraction (mixed model)")
@click.option("--neg-shift", type=float, default=0.0, show_default=True, help="latent shift of flagged negatives")
@click.option("--out", "out_path", default="-", show_default=True, help="cohort CSV path, - for stdout")
def synth_cmd(mu, prevalence, n, seed, squash, product_name, prior_tb_fraction, neg_shift, out_path):
    """Generate a seeded binormal cohort as cohort CSV."""
    spec = BinormalSpec(mu_sep=mu, prevalence=prevalence, n=n, seed=seed, squash=squash)
    if prior_tb_fraction is None:
        cohort = synth.generate(spec, product=product_name)
    else:
        cohort = synth.generate_mixed(
            PriorTbMixSpec(base=spec, prior_tb_fraction=prior_tb_fraction, neg_shift=neg_shift),
            product=product_name,
        )
    text = cohort_to_csv(cohort)
    if out_path == "-":
        click.echo(text, nl=False)
    else:
        out_dir = os.path.dirname(os.path.abspath(out_path))
        _write_atomic(out_dir, os.path.basename(out_path), text)


@cli.command()
@click.option("--input", "input_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--reports", "report_dir", default=None, type=click.Path(file_okay=False), help="audit CSV directory (default: --out)")
@click.option(
    "--no-word-filter",
    "--faithful-annex5",
    "disable_word_filter",
    is_flag=True,
    default=False,
    help="keep only the header check; skip the body-part word filter",
)
@click.option("--workers", default=1, show_default=True)
def anonymize(input_dir, out_dir, rules_path, report_dir, disable_word_filter, workers):
    """Batch-anonymize a directory of DICOM files."""
    with open(rules_path, newline="") as fh:
        rules = load_rules(fh)
    report_dir = report_dir or out_dir
    os.makedirs(out_dir, exist_ok=True)
    os.makedirs(report_dir, exist_ok=True)
    report = run_batch(
        input_dir, out_dir, rules, report_dir,
        word_filter=not disable_word_filter, workers=workers,
    )
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "anonymize",
        "report": report.as_dict(),
    })


@cli.command()
@_in
@_scale
@_pscale
def summary(input_path, score_scale, product_scale):
    """Descriptive cohort summary (counts, prevalence, quartiles)."""
    cohort = _load_cohort(input_path, score_scale, product_scale)
    _emit({
        "schema_version": SCHEMA_VERSION,
        "command": "summary",
        "summary": _finite(cohort_summary(cohort).as_dict()),
    })


def _finite(obj):
    """JSON-safe copy: non-finite floats become None."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


if __name__ == "__main__":
    main()
