"""Render evaluation reports: JSON, per-table CSVs, text tables, and figures."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

CLASS_MODEL_ORDER = ["FinBERT", "P1", "P2", "P3", "P4", "P5", "P6"]
NUMERIC_MODEL_ORDER = ["FinBERT-N", "P1N", "P2N", "P3N", "P4N", "P5N", "P6N"]


def is_numeric_model(model_id: str) -> bool:
    return model_id.endswith("N")


def _ordered(models: list[str], preferred: list[str]) -> list[str]:
    known = [m for m in preferred if m in models]
    rest = sorted(m for m in models if m not in preferred)
    return known + rest


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def classification_table(report: dict, filtered: bool = False) -> list[list[str]]:
    source = report["filtered_classification"] if filtered else {
        m: block["classification"] for m, block in report["models"].items()
    }
    rows = [["model", "accuracy", "precision", "recall", "f1", "s_mae", "n_scored", "unscored"]]
    models = [m for m, c in source.items() if c is not None]
    for model in _ordered(models, CLASS_MODEL_ORDER):
        c = source[model]
        rows.append(
            [model] + [_cell(c[k]) for k in ("accuracy", "precision", "recall", "f1", "s_mae", "n_scored", "unscored")]
        )
    return rows


def best_per_pair_table(report: dict) -> list[list[str]]:
    rows = [["pair", "accuracy", "precision", "recall", "f1", "s_mae"]]
    for ticker in sorted(report["best_model_per_pair"]):
        best = report["best_model_per_pair"][ticker]
        rows.append([ticker] + [best[k] for k in ("accuracy", "precision", "recall", "f1", "s_mae")])
    return rows


def da_table(report: dict, numeric: bool) -> list[list[str]]:
    rows = [["model", "directional_accuracy", "n_counted", "zero_sentiment_days"]]
    models = [
        m
        for m, block in report["models"].items()
        if block["market"] is not None and is_numeric_model(m) == numeric
    ]
    order = NUMERIC_MODEL_ORDER if numeric else CLASS_MODEL_ORDER
    for model in _ordered(models, order):
        market = report["models"][model]["market"]
        rows.append(
            [
                model,
                _cell(market["directional_accuracy"]),
                _cell(market["n_counted"]),
                _cell(market["zero_sentiment_days"]),
            ]
        )
    return rows


def da_per_ticker_table(report: dict) -> list[list[str]]:
    tickers = report["panel"]["tickers"]
    rows = [["model"] + list(tickers)]
    models = [m for m, block in report["models"].items() if block["market"] is not None]
    for model in _ordered(models, NUMERIC_MODEL_ORDER + CLASS_MODEL_ORDER):
        per = report["models"][model]["market"]["per_ticker_da"]
        rows.append([model] + [_cell(per.get(t)) for t in tickers])
    return rows


def cost_table(report: dict) -> list[list[str]]:
    rows = [
        [
            "model",
            "mean_time_per_prompt_s",
            "mean_tokens_per_prompt",
            "mean_time_per_headline_s",
            "mean_tokens_per_headline",
            "total_tokens",
            "estimated_cost_usd",
            "projected_daily_cost_usd",
        ]
    ]
    models = [m for m, block in report["models"].items() if block["cost"] is not None]
    for model in _ordered(models, CLASS_MODEL_ORDER + NUMERIC_MODEL_ORDER):
        c = report["models"][model]["cost"]
        total = c["total_prompt_tokens"] + c["total_completion_tokens"]
        rows.append(
            [
                model,
                _cell(c["mean_time_per_prompt"]),
                _cell(c["mean_tokens_per_prompt"]),
                _cell(c["mean_time_per_headline"]),
                _cell(c["mean_tokens_per_headline"]),
                _cell(total),
                _cell(c["estimated_cost_usd"]),
                _cell(c["projected_daily_cost_usd"]),
            ]
        )
    return rows


def correlation_table(report: dict) -> list[list[str]] | None:
    block = report.get("correlation")
    if not block:
        return None
    rows = [[""] + block["labels"]]
    for label, row in zip(block["labels"], block["matrix"]):
        rows.append([label] + [_cell(v) for v in row])
    return rows


def all_tables(report: dict) -> dict[str, list[list[str]]]:
    tables = {
        "classification": classification_table(report),
        "classification_filtered": classification_table(report, filtered=True),
        "best_model_per_pair": best_per_pair_table(report),
        "da_class_models": da_table(report, numeric=False),
        "da_numeric_models": da_table(report, numeric=True),
        "da_per_ticker": da_per_ticker_table(report),
        "cost": cost_table(report),
    }
    correlation = correlation_table(report)
    if correlation is not None:
        tables["correlation_matrix"] = correlation
    return tables


# --- text rendering ---------------------------------------------------------------


def _fmt_text(value: str) -> str:
    try:
        number = float(value)
    except (TypeError, ValueError):
        return value if value else "-"
    if number == int(number) and "." not in value:
        return value
    return f"{number:.3f}"


def render_table_text(title: str, rows: list[list[str]], numeric_fmt: bool = True) -> str:
    if len(rows) <= 1:
        return f"== {title} ==\n(no data)\n"
    body = [rows[0]] + [
        [row[0]] + [(_fmt_text(v) if numeric_fmt else (v or "-")) for v in row[1:]]
        for row in rows[1:]
    ]
    widths = [max(len(str(r[i])) for r in body) for i in range(len(rows[0]))]
    lines = [f"== {title} =="]
    for i, row in enumerate(body):
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_text_report(report: dict) -> str:
    tables = all_tables(report)
    titles = {
        "classification": "Sentiment classification",
        "classification_filtered": "Sentiment classification (headlines without pair mention)",
        "best_model_per_pair": "Best model per forex pair",
        "da_class_models": "Directional accuracy (class models)",
        "da_numeric_models": "Directional accuracy (numeric models)",
        "da_per_ticker": "Directional accuracy per ticker",
        "cost": "Tokens, latency and cost per prompt",
        "correlation_matrix": "Correlation of daily sentiment and market returns",
    }
    sections = []
    corpus = report["corpus"]
    sections.append(
        f"fxsentibench report (zero policy: {report['settings']['zero_policy']}, "
        f"returns: {report['settings']['return_mode']})\n"
        f"corpus: {corpus['n_records']} records, {corpus['n_skipped_rows']} skipped rows, "
        f"{corpus['no_pair_mention_subset_size']} without pair mention\n"
    )
    for name, rows in tables.items():
        numeric = name != "best_model_per_pair"
        sections.append(render_table_text(titles[name], rows, numeric_fmt=numeric))
    return "\n".join(sections)


# --- file outputs ---------------------------------------------------------------


def _write_csv(path: Path, rows: list[list[str]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    path.write_text(buffer.getvalue(), encoding="utf-8")


def write_figures(report: dict, figures_dir: Path) -> list[Path]:
    """Correlation heatmap and directional-accuracy bars as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written: list[Path] = []
    figures_dir.mkdir(parents=True, exist_ok=True)

    block = report.get("correlation")
    if block:
        labels = block["labels"]
        matrix = block["matrix"]
        fig, ax = plt.subplots(figsize=(1.0 + 0.62 * len(labels), 0.8 + 0.62 * len(labels)))
        image = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdYlGn")
        ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right", fontsize=8)
        ax.set_yticks(range(len(labels)), labels, fontsize=8)
        for i in range(len(labels)):
            for j in range(len(labels)):
                ax.text(j, i, f"{matrix[i][j]:.2f}", ha="center", va="center", fontsize=7)
        fig.colorbar(image, ax=ax, fraction=0.046)
        ax.set_title("Daily sentiment vs market returns")
        fig.tight_layout()
        path = figures_dir / "correlation_matrix.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    da_rows = [
        (m, report["models"][m]["market"]["directional_accuracy"])
        for m in _ordered(
            [m for m, b in report["models"].items() if b["market"] is not None],
            CLASS_MODEL_ORDER + NUMERIC_MODEL_ORDER,
        )
    ]
    if da_rows:
        names = [m for m, _ in da_rows]
        values = [v for _, v in da_rows]
        fig, ax = plt.subplots(figsize=(7, 0.6 + 0.34 * len(names)))
        ax.barh(range(len(names)), values, color="#3a7ca5")
        ax.set_yticks(range(len(names)), names, fontsize=8)
        ax.invert_yaxis()
        ax.set_xlim(0, 1)
        ax.set_xlabel(f"directional accuracy ({report['settings']['zero_policy']})")
        ax.axvline(0.5, color="grey", linestyle=":", linewidth=1)
        fig.tight_layout()
        path = figures_dir / "directional_accuracy.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def write_run_outputs(
    report: dict,
    manifest: dict,
    out_dir: str | Path,
    figures: bool = True,
) -> dict[str, Path]:
    """Write report.json, per-table CSVs, the text report, figures, and the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables_dir = out_dir / "tables"
    tables_dir.mkdir(exist_ok=True)

    paths: dict[str, Path] = {}
    report_path = out_dir / "report.json"
    report_path.write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    paths["report_json"] = report_path

    for name, rows in all_tables(report).items():
        table_path = tables_dir / f"{name}.csv"
        _write_csv(table_path, rows)
        paths[f"table_{name}"] = table_path

    text_path = out_dir / "report.txt"
    text_path.write_text(render_text_report(report), encoding="utf-8")
    paths["report_txt"] = text_path

    if figures:
        for figure_path in write_figures(report, out_dir / "figures"):
            paths[f"figure_{figure_path.stem}"] = figure_path

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    paths["manifest"] = manifest_path
    return paths
