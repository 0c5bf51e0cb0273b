"""Quality measures: PSNR, SSIM, label precision/recall/F, AEE, AAE.

All image metrics assume normalized [0,1] intensities (dynamic range 1).
Label scores work on integer label maps and absorb arbitrary label
permutations through an explicit injective matching.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import gaussian_kernel

SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_same_shape(u, ref):
    u = np.asarray(u, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if u.shape != ref.shape:
        raise ValueError("metric arguments must share a shape")
    return u, ref


def psnr(u, ref) -> float:
    """Peak signal-to-noise ratio in dB; identical images give +inf."""
    u, ref = _check_same_shape(u, ref)
    mse = float(np.mean((u - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a symmetric 1-D kernel."""
    n = kernel.size
    out = np.zeros((img.shape[0] - n + 1, img.shape[1]))
    for t in range(n):
        out += kernel[t] * img[t : t + out.shape[0], :]
    out2 = np.zeros((out.shape[0], img.shape[1] - n + 1))
    for t in range(n):
        out2 += kernel[t] * out[:, t : t + out2.shape[1]]
    return out2


def ssim(u, ref) -> float:
    """Mean structural similarity, 11x11 Gaussian window (sigma 1.5),
    K1 = 0.01, K2 = 0.03, dynamic range 1.

    The local statistics are written symmetrically in both arguments,
    so ssim(u, u) is exactly 1.
    """
    u, ref = _check_same_shape(u, ref)
    kernel = gaussian_kernel(SSIM_SIGMA)
    n = kernel.size
    if min(u.shape) < n:
        raise ValueError("images must be at least %dx%d for SSIM" % (n, n))
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    mu1 = _filter_valid(u, kernel)
    mu2 = _filter_valid(ref, kernel)
    s11 = _filter_valid(u * u, kernel) - mu1 * mu1
    s22 = _filter_valid(ref * ref, kernel) - mu2 * mu2
    s12 = _filter_valid(u * ref, kernel) - mu1 * mu2
    num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)
    den = (mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2)
    return float(np.mean(num / den))


def match_labels(pred: np.ndarray, gt: np.ndarray) -> dict:
    """Greedy injective matching predicted -> ground-truth label.

    Pairs are claimed in order of decreasing intersection size (ties by
    label value), each side used at most once.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError("label maps must share a shape")
    pairs, counts = np.unique(
        np.stack([pred.ravel(), gt.ravel()]), axis=1, return_counts=True
    )
    order = sorted(
        range(len(counts)), key=lambda k: (-counts[k], pairs[0, k], pairs[1, k])
    )
    mapping: dict = {}
    used_gt = set()
    for k in order:
        p, g = int(pairs[0, k]), int(pairs[1, k])
        if p not in mapping and g not in used_gt:
            mapping[p] = g
            used_gt.add(g)
    return mapping


def label_scores(pred: np.ndarray, gt: np.ndarray):
    """(precision, recall, f_measure) under the greedy label matching.

    precision counts correctly matched pixels against all pixels whose
    predicted label found a match; recall against all pixels whose
    ground-truth label was matched.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    mapping = match_labels(pred, gt)
    correct = 0
    pred_total = 0
    gt_total = 0
    matched_gt = set(mapping.values())
    for p, g in mapping.items():
        sel = pred == p
        correct += int(np.count_nonzero(sel & (gt == g)))
        pred_total += int(np.count_nonzero(sel))
    for g in matched_gt:
        gt_total += int(np.count_nonzero(gt == g))
    precision = correct / pred_total if pred_total else 0.0
    recall = correct / gt_total if gt_total else 0.0
    f_measure = (
        2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    )
    return precision, recall, f_measure


def aee(u, gt) -> float:
    """Average endpoint error: mean Euclidean distance per pixel."""
    u, gt = _check_same_shape(u, gt)
    diff = u - gt
    return float(np.mean(np.sqrt(np.sum(diff * diff, axis=-1))))


def aae(u, gt) -> float:
    """Average angular error (radians) between homogeneous extensions
    (u1, u2, 1) and (g1, g2, 1)."""
    u, gt = _check_same_shape(u, gt)
    num = 1.0 + np.sum(u * gt, axis=-1)
    den = np.sqrt(1.0 + np.sum(u * u, axis=-1)) * np.sqrt(1.0 + np.sum(gt * gt, axis=-1))
    return float(np.mean(np.arccos(np.clip(num / den, -1.0, 1.0))))


def metrics_csv(rows) -> str:
    """CSV block `metric,value` from (name, value) pairs."""
    lines = ["metric,value"]
    for name, value in rows:
        lines.append("%s,%r" % (name, float(value)))
    return "\n".join(lines) + "\n"
