"""Render an EvalReport to files: aligned text, key=value pairs, TSV
tables, and matplotlib figures for the length/span/label breakdowns."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .scoring import SPAN_LENGTH_CAP, EvalReport


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def write_report_files(report: EvalReport, outdir, prefix="") -> list:
    """Text + key=value summary; returns the paths written."""
    os.makedirs(outdir, exist_ok=True)
    txt = os.path.join(outdir, prefix + "report.txt")
    kv = os.path.join(outdir, prefix + "report.kv")
    _write(txt, report.to_text())
    _write(kv, report.to_kv())
    return [txt, kv]


def _tsv(rows, header):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def write_breakdown_tables(report: EvalReport, outdir, prefix="") -> list:
    os.makedirs(outdir, exist_ok=True)
    paths = []

    path = os.path.join(outdir, prefix + "per_label.tsv")
    rows = [(l, r.gold, r.pred, r.correct, "%.2f" % r.f1)
            for l, r in sorted(report.per_label.items(), key=lambda kv: -kv[1].gold)]
    _write(path, _tsv(rows, ("label", "gold", "pred", "correct", "f1")))
    paths.append(path)

    path = os.path.join(outdir, prefix + "len_bins.tsv")
    rows = [(k, r.gold, r.pred, r.correct, "%.2f" % r.f1)
            for k, r in sorted(report.len_bins.items())]
    _write(path, _tsv(rows, ("len_bin", "gold", "pred", "correct", "f1")))
    paths.append(path)

    path = os.path.join(outdir, prefix + "span_lengths.tsv")
    rows = [(k, r.gold, r.pred, r.correct, "%.2f" % r.f1)
            for k, r in sorted(report.span_bins.items())]
    _write(path, _tsv(rows, ("span_len", "gold", "pred", "correct", "f1")))
    paths.append(path)
    return paths


def write_figures(report: EvalReport, outdir, prefix="") -> list:
    os.makedirs(outdir, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = sorted(report.len_bins)
    ax.plot(keys, [report.len_bins[k].f1 for k in keys], marker="o", color="black")
    ax.set_xlabel("sentence length (bin upper edge)")
    ax.set_ylabel("F1 (%)")
    ax.grid(True, linestyle="--", alpha=0.5)
    fig.tight_layout()
    path = os.path.join(outdir, prefix + "f1_by_sentence_length.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    keys = sorted(report.span_bins)
    labels = ["%d" % k if k < SPAN_LENGTH_CAP else "%d+" % k for k in keys]
    ax.plot(range(len(keys)), [report.span_bins[k].f1 for k in keys],
            marker="o", color="black")
    ax.set_xticks(range(len(keys)), labels)
    ax.set_xlabel("span length")
    ax.set_ylabel("F1 (%)")
    ax.grid(True, linestyle="--", alpha=0.5)
    fig.tight_layout()
    path = os.path.join(outdir, prefix + "f1_by_span_length.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 3.5))
    items = sorted(report.per_label.items(), key=lambda kv: -kv[1].gold)[:12]
    ax.bar([l for l, _ in items], [r.f1 for _, r in items], color="gray")
    ax.set_xlabel("constituent label")
    ax.set_ylabel("F1 (%)")
    fig.tight_layout()
    path = os.path.join(outdir, prefix + "per_label_f1.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths
