"""Confusion-matrix metrics: accuracy, micro/macro precision and recall.

Micro-averaged precision and recall pool per-class counts globally, which for
single-label classification makes both equal to accuracy; macro averaging
treats classes uniformly, with 0/0 per-class terms defined as 0.
"""

import io
from dataclasses import dataclass

import numpy as np


def confusion(true_labels, predicted_labels, n_classes):
    """Counts[t][p] over aligned label lists."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(f"label lists differ in length: {t.shape} vs {p.shape}")
    if t.size and (t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes):
        raise ValueError(f"labels outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass
class MetricsReport:
    accuracy: float
    precision_micro: float
    precision_macro: float
    recall_micro: float
    recall_macro: float


def metrics_from_confusion(cm):
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    tp_sum, fp_sum, fn_sum = int(tp.sum()), int(fp.sum()), int(fn.sum())
    # micro P and R share the numerator with accuracy and, in single-label
    # classification, the denominators too (fp_sum == fn_sum == total - tp_sum)
    accuracy = tp_sum / total
    precision_micro = tp_sum / (tp_sum + fp_sum)
    recall_micro = tp_sum / (tp_sum + fn_sum)

    def safe(num, den):
        return np.where(den > 0, num / np.maximum(den, 1), 0.0)

    precision_macro = float(safe(tp, tp + fp).mean())
    recall_macro = float(safe(tp, tp + fn).mean())
    return MetricsReport(accuracy=accuracy, precision_micro=precision_micro,
                         precision_macro=precision_macro, recall_micro=recall_micro,
                         recall_macro=recall_macro)


def format_pct(mean, std=None):
    """Percent with two decimals; adds '± y.yy' when a std is given."""
    if std is None:
        return f"{100.0 * mean:.2f}"
    return f"{100.0 * mean:.2f} ± {100.0 * std:.2f}"


_COLUMNS = (("accuracy", "Accuracy"),
            ("precision_micro", "Precision (micro)"),
            ("precision_macro", "Precision (macro)"),
            ("recall_micro", "Recall (micro)"),
            ("recall_macro", "Recall (macro)"))


def format_report(report):
    """Aligned text table for a MetricsReport or a RoundsReport."""
    if isinstance(report, MetricsReport):
        cells = [format_pct(getattr(report, key)) for key, _ in _COLUMNS]
        extra = []
    else:
        cells = [format_pct(report.means[key], report.stds[key]) for key, _ in _COLUMNS]
        extra = [f"rounds: {report.rounds}",
                 f"train time per round: {report.train_seconds_mean:.1f} "
                 f"± {report.train_seconds_std:.1f} s",
                 f"data preparation: {report.prep_seconds:.1f} s"]
    headers = [h for _, h in _COLUMNS]
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)),
             "  ".join(c.ljust(w) for c, w in zip(cells, widths))]
    return "\n".join(lines + extra)


def report_to_csv(report):
    buf = io.StringIO()
    keys = [key for key, _ in _COLUMNS]
    if isinstance(report, MetricsReport):
        buf.write(",".join(keys) + "\n")
        buf.write(",".join(f"{getattr(report, k):.6f}" for k in keys) + "\n")
    else:
        buf.write("metric,mean,std\n")
        for k in keys:
            buf.write(f"{k},{report.means[k]:.6f},{report.stds[k]:.6f}\n")
        buf.write(f"train_seconds,{report.train_seconds_mean:.3f},"
                  f"{report.train_seconds_std:.3f}\n")
    return buf.getvalue()


def ablation_to_text(rows):
    """Rows from the ablation runner, LSTM/BiLSTM accuracy side by side."""
    by_key = {}
    for r in rows:
        key = (r["units"], r["bart_depth"], r["roberta_depth"], r["ensemble_depth"])
        by_key.setdefault(key, {})[r["cell"]] = r
    lines = []
    header = f"{'units':>5}  {'bart/roberta/ensemble':>22}  {'LSTM':>15}  {'BiLSTM':>15}"
    last_units = None
    for key in sorted(by_key):
        units, bd, rd, ed = key
        if units != last_units:
            lines.append(header)
            last_units = units
        cells = []
        for cell in ("LSTM", "BiLSTM"):
            r = by_key[key].get(cell)
            if r is None:
                cells.append("-".rjust(15))
            else:
                std = r["accuracy_std"]
                cells.append(format_pct(r["accuracy_mean"],
                                        std if std > 0 else None).rjust(15))
        lines.append(f"{units:>5}  {f'{bd} / {rd} / {ed}':>22}  {cells[0]}  {cells[1]}")
    return "\n".join(lines)


def ablation_to_csv(rows):
    buf = io.StringIO()
    buf.write("units,cell,bart_depth,roberta_depth,ensemble_depth,"
              "accuracy_mean,accuracy_std,train_seconds\n")
    for r in rows:
        buf.write(f"{r['units']},{r['cell']},{r['bart_depth']},{r['roberta_depth']},"
                  f"{r['ensemble_depth']},{r['accuracy_mean']:.6f},"
                  f"{r['accuracy_std']:.6f},{r['train_seconds']:.3f}\n")
    return buf.getvalue()
