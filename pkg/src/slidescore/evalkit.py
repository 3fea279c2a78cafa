"""Meta-evaluation of the verifiable metrics against labeled defect data.

Computes per-dimension F1/F2/ROC-AUC with the classification threshold
chosen by the optimal-F2 criterion.  Labels arrive as JSONL records:

    {"sample_id": "s1", "defect_labels": {"aspect": "defect", ...}}

with per-dimension labels in {defect, ok, not_applicable}.  Predictions are
JSONL records carrying either explicit defect scores

    {"sample_id": "s1", "defect_scores": {"aspect": 0.83, ...}}

or a batch-scoring result with a reward_vector, in which case the defect
score is 1 - reward (higher = more defective).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

DIMENSIONS = ("aspect", "whitespace", "collision", "imbalance")
LABELS = ("defect", "ok", "not_applicable")


class DegenerateLabelsError(ValueError):
    pass


class RecordMismatchError(ValueError):
    pass


def f_beta(tp: int, fp: int, fn: int, beta: float) -> float:
    """F-beta from confusion counts; zero-denominator conventions give 0."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError("counts must be >= 0")
    if tp + fp + fn == 0:
        raise ValueError("all counts zero")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


def roc_auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC; ties contribute 0.5."""
    pairs = list(zip(scores, labels))
    pos = [s for s, y in pairs if y]
    neg = [s for s, y in pairs if not y]
    if not pos or not neg:
        raise DegenerateLabelsError("need at least one positive and one negative")
    # average ranks over the pooled sample
    order = sorted(range(len(pairs)), key=lambda i: pairs[i][0])
    ranks = [0.0] * len(pairs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pairs[order[j + 1]][0] == pairs[order[i]][0]:
            j += 1
        avg = (i + j) / 2 + 1  # 1-based average rank of the tie block
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    rank_sum_pos = sum(r for r, (_, y) in zip(ranks, pairs) if y)
    n_pos, n_neg = len(pos), len(neg)
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def optimal_f2_threshold(scores, labels) -> dict:
    """Sweep distinct scores as thresholds (defect iff score >= t), maximize
    F2; ties break toward the threshold flagging fewer positives."""
    pairs = list(zip(scores, labels))
    if not any(y for _, y in pairs) or all(y for _, y in pairs):
        raise DegenerateLabelsError("labels are single-class")
    candidates = sorted(set(scores))
    candidates.append(max(candidates) + 1.0)  # "flag nothing" sentinel
    best = None
    for t in candidates:
        tp = sum(1 for s, y in pairs if s >= t and y)
        fp = sum(1 for s, y in pairs if s >= t and not y)
        fn = sum(1 for s, y in pairs if s < t and y)
        f2 = f_beta(tp, fp, fn, 2.0)
        f1 = f_beta(tp, fp, fn, 1.0)
        n_flagged = tp + fp
        # strictly better F2 wins; equal F2 prefers fewer flagged positives
        key = (f2, -n_flagged)
        if best is None or key > best[0]:
            best = (key, {"threshold": t, "f1": f1, "f2": f2})
    return best[1]


@dataclass
class DimensionEval:
    f1: float
    f2: float
    roc_auc: float
    chosen_threshold: float
    support_pos: int
    support_neg: int

    def to_dict(self) -> dict:
        return {"f1": self.f1, "f2": self.f2, "roc_auc": self.roc_auc,
                "chosen_threshold": self.chosen_threshold,
                "support_pos": self.support_pos, "support_neg": self.support_neg}


def _load_jsonl(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def defect_scores_of(record: dict) -> dict:
    if "defect_scores" in record:
        return {d: float(v) for d, v in record["defect_scores"].items()}
    if "reward_vector" in record:
        comps = record["reward_vector"]["components"]
        return {d: 1.0 - float(comps[d]) for d in DIMENSIONS if d in comps}
    raise RecordMismatchError(
        f"record {record.get('sample_id')!r} has neither defect_scores nor reward_vector")


def metaeval_records(labeled: list[dict], predictions: list[dict]) -> dict:
    """Per-dimension F1/F2/AUC over aligned label and prediction records."""
    preds_by_id = {r["sample_id"]: r for r in predictions}
    missing = [r["sample_id"] for r in labeled if r["sample_id"] not in preds_by_id]
    if missing:
        raise RecordMismatchError(f"predictions missing for sample_ids: {missing}")

    result = {}
    for dim in DIMENSIONS:
        scores, labels = [], []
        for rec in labeled:
            label = rec.get("defect_labels", {}).get(dim, "not_applicable")
            if label not in LABELS:
                raise ValueError(f"bad label {label!r} for {rec['sample_id']}/{dim}")
            if label == "not_applicable":
                continue
            dim_scores = defect_scores_of(preds_by_id[rec["sample_id"]])
            if dim not in dim_scores:
                continue
            scores.append(dim_scores[dim])
            labels.append(label == "defect")
        if not scores:
            continue
        auc = roc_auc(scores, labels)
        opt = optimal_f2_threshold(scores, labels)
        result[dim] = DimensionEval(
            f1=opt["f1"], f2=opt["f2"], roc_auc=auc,
            chosen_threshold=opt["threshold"],
            support_pos=sum(labels), support_neg=len(labels) - sum(labels))
    return result


def metaeval(labels_path, predictions_path) -> dict:
    return metaeval_records(_load_jsonl(labels_path), _load_jsonl(predictions_path))


def format_table(result: dict) -> str:
    lines = [f"{'dimension':<12}{'F1':>8}{'F2':>8}{'ROC-AUC':>10}{'thresh':>9}{'pos':>6}{'neg':>6}"]
    for dim, ev in result.items():
        lines.append(f"{dim:<12}{ev.f1:>8.3f}{ev.f2:>8.3f}{ev.roc_auc:>10.3f}"
                     f"{ev.chosen_threshold:>9.3f}{ev.support_pos:>6}{ev.support_neg:>6}")
    return "\n".join(lines)


def result_to_json(result: dict) -> dict:
    return {dim: ev.to_dict() for dim, ev in result.items()}


def emit_overlay(screenshot, variance_field, out_path, tau: float = 0.05):
    """Write the red-mask whitespace overlay for a screenshot as PNG."""
    from PIL import Image

    from .scoring import overlay_image

    blended = overlay_image(screenshot, variance_field, tau)
    Image.fromarray(blended).save(out_path, format="PNG")
