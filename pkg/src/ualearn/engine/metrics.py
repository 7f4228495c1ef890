"""Evaluation metrics: accuracy, macro precision/recall/F1, and ECE."""

import numpy as np


def ece(confidences, correct, bins=15):
    """Expected calibration error over equal-width confidence bins.

    ECE = sum_b (n_b / n) * |acc_b - conf_b|; empty bins contribute 0.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    confidences = np.asarray(confidences, dtype=np.float64)
    correct = np.asarray(correct, dtype=np.float64)
    if confidences.shape != correct.shape:
        raise ValueError("confidences and correct must align")
    n = confidences.shape[0]
    if n == 0:
        return 0.0
    idx = np.minimum((confidences * bins).astype(np.int64), bins - 1)
    total = 0.0
    for b in range(bins):
        mask = idx == b
        n_b = int(mask.sum())
        if n_b == 0:
            continue
        acc_b = correct[mask].mean()
        conf_b = confidences[mask].mean()
        total += (n_b / n) * abs(acc_b - conf_b)
    return float(total)


def classification_metrics(y_true, y_pred, class_count):
    """Accuracy plus macro-averaged precision/recall/F1 (0/0 counts as 0)."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    accuracy = float((y_true == y_pred).mean()) if y_true.size else 0.0
    precisions, recalls, f1s = [], [], []
    for c in range(class_count):
        tp = int(((y_pred == c) & (y_true == c)).sum())
        fp = int(((y_pred == c) & (y_true != c)).sum())
        fn = int(((y_pred != c) & (y_true == c)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
    return {
        "accuracy": accuracy,
        "precision": float(np.mean(precisions)),
        "recall": float(np.mean(recalls)),
        "f1": float(np.mean(f1s)),
    }


def evaluate_distributions(dists, y_true, class_count, ece_bins=15):
    """Metrics from predictive distributions: argmax of the MC mean."""
    y_pred = np.array([int(d.mean.argmax()) for d in dists], dtype=np.int64)
    record = classification_metrics(y_true, y_pred, class_count)
    confidences = np.array([float(d.mean.max()) for d in dists])
    record["ece"] = ece(confidences, (y_pred == np.asarray(y_true)), bins=ece_bins)
    return record
