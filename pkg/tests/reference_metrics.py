"""Brute-force reference implementations of the six metrics.

Deliberately slow and literal: explicit per-threshold recounts, explicit
quadrant handling, explicit nearest-foreground search. These provide an
independent route against which the production implementations are
checked; keep them free of the production code's vectorization tricks.

Inputs are plain numpy arrays: pred float64 (H, W) in [0, 1], gt bool (H, W).
"""

from __future__ import annotations

import math

import numpy as np

EPS = float(np.finfo(np.float64).eps)


def ref_mae(pred, gt):
    total = 0.0
    h, w = gt.shape
    for i in range(h):
        for j in range(w):
            total += abs(pred[i, j] - (1.0 if gt[i, j] else 0.0))
    return total / (h * w)


def _ref_object_score(values):
    n = len(values)
    x = sum(values) / n
    if n > 1:
        sd = math.sqrt(sum((v - x) ** 2 for v in values) / (n - 1))
    else:
        sd = 0.0
    return 2.0 * x / (x * x + 1.0 + sd + EPS)


def _ref_ssim(pred_block, gt_block):
    n = pred_block.size
    if n == 0:
        return 0.0
    p = [float(v) for v in pred_block.ravel()]
    g = [float(v) for v in gt_block.ravel()]
    x = sum(p) / n
    y = sum(g) / n
    sx = sum((v - x) ** 2 for v in p) / (n - 1 + EPS)
    sy = sum((v - y) ** 2 for v in g) / (n - 1 + EPS)
    sxy = sum((a - x) * (b - y) for a, b in zip(p, g)) / (n - 1 + EPS)
    alpha = 4.0 * x * y * sxy
    beta = (x * x + y * y) * (sx + sy)
    if alpha != 0.0:
        return alpha / (beta + EPS)
    return 1.0 if beta == 0.0 else 0.0


def ref_s_measure(pred, gt):
    h, w = gt.shape
    g = gt.astype(np.float64)
    y_mean = g.sum() / (h * w)
    if y_mean == 0.0:
        return 1.0 - pred.sum() / (h * w)
    if y_mean == 1.0:
        return pred.sum() / (h * w)

    fg_vals = [float(pred[i, j]) for i in range(h) for j in range(w) if gt[i, j]]
    bg_vals = [1.0 - float(pred[i, j]) for i in range(h) for j in range(w) if not gt[i, j]]
    s_object = y_mean * _ref_object_score(fg_vals) + (1.0 - y_mean) * _ref_object_score(bg_vals)

    area = g.sum()
    cx = math.floor(sum((j + 1) * g[i, j] for i in range(h) for j in range(w)) / area + 0.5)
    cy = math.floor(sum((i + 1) * g[i, j] for i in range(h) for j in range(w)) / area + 0.5)
    weights = [
        (cx * cy) / (w * h),
        ((w - cx) * cy) / (w * h),
        (cx * (h - cy)) / (w * h),
    ]
    weights.append(1.0 - weights[0] - weights[1] - weights[2])
    blocks = [
        (pred[:cy, :cx], g[:cy, :cx]),
        (pred[:cy, cx:], g[:cy, cx:]),
        (pred[cy:, :cx], g[cy:, :cx]),
        (pred[cy:, cx:], g[cy:, cx:]),
    ]
    s_region = sum(wt * _ref_ssim(pb, gb) for wt, (pb, gb) in zip(weights, blocks))
    return max(0.5 * s_object + 0.5 * s_region, 0.0)


def ref_e_measure_adaptive(pred, gt):
    h, w = gt.shape
    thr = min(2.0 * pred.mean(), 1.0)
    fm = (pred >= thr).astype(np.float64)
    g = gt.astype(np.float64)
    if g.sum() == 0:
        enhanced = 1.0 - fm
    elif g.sum() == g.size:
        enhanced = fm
    else:
        mu_f = fm.mean()
        mu_g = g.mean()
        total = 0.0
        for i in range(h):
            for j in range(w):
                df = fm[i, j] - mu_f
                dg = g[i, j] - mu_g
                align = 2.0 * dg * df / (dg * dg + df * df + EPS)
                total += (align + 1.0) ** 2 / 4.0
        return total / (h * w)
    return float(enhanced.sum()) / (h * w)


def ref_f_measures(pred, gt, beta_sq=0.3):
    """Returns (adaptive, maximum, precisions, recalls); Nones when gt is empty."""
    n_fg = int(gt.sum())
    if n_fg == 0:
        return None, None, None, None

    def f_at(binary):
        tp = int(np.count_nonzero(binary & gt))
        fp = int(np.count_nonzero(binary & ~gt))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / n_fg
        denom = beta_sq * precision + recall
        f = (1.0 + beta_sq) * precision * recall / denom if denom > 0 else 0.0
        return f, precision, recall

    precisions, recalls = [], []
    f_max = 0.0
    for t in range(256):
        f, p, r = f_at(pred * 255.0 >= t)
        precisions.append(p)
        recalls.append(r)
        f_max = max(f_max, f)
    thr = min(2.0 * pred.mean(), 1.0)
    adaptive, _, _ = f_at(pred >= thr)
    return adaptive, f_max, np.array(precisions), np.array(recalls)


def ref_weighted_f_measure(pred, gt):
    h, w = gt.shape
    if not gt.any():
        return None
    g = gt.astype(np.float64)
    err = np.abs(pred - g)

    # Column-major foreground list so that the first minimum found is the
    # smallest column-major index (the pinned tie-break rule).
    fg = [(x, y) for x in range(w) for y in range(h) if gt[y, x]]
    fgx = np.array([p[0] for p in fg])
    fgy = np.array([p[1] for p in fg])
    err_t = err.copy()
    dist = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            if gt[i, j]:
                continue
            d2 = (fgx - j) ** 2 + (fgy - i) ** 2
            k = int(np.argmin(d2))  # first occurrence: column-major tie-break
            dist[i, j] = math.sqrt(float(d2[k]))
            err_t[i, j] = err[fgy[k], fgx[k]]

    # 7x7 Gaussian (sigma 5) correlation with zero padding, by hand.
    half = 3
    ys, xs = np.mgrid[-half : half + 1, -half : half + 1]
    kernel = np.exp(-(xs * xs + ys * ys) / (2.0 * 5.0 * 5.0))
    kernel /= kernel.sum()
    ea = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in range(-half, half + 1):
                for dj in range(-half, half + 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < h and 0 <= jj < w:
                        acc += err_t[ii, jj] * kernel[di + half, dj + half]
            ea[i, j] = acc

    min_e_ea = err.copy()
    for i in range(h):
        for j in range(w):
            if gt[i, j] and ea[i, j] < err[i, j]:
                min_e_ea[i, j] = ea[i, j]

    weight = np.ones((h, w))
    for i in range(h):
        for j in range(w):
            if not gt[i, j]:
                weight[i, j] = 2.0 - math.exp(math.log(0.5) / 5.0 * dist[i, j])
    ew = min_e_ea * weight

    tp_w = g.sum() - float(ew[gt].sum())
    fp_w = float(ew[~gt].sum())
    recall = 1.0 - float(ew[gt].mean())
    precision = tp_w / (EPS + tp_w + fp_w)
    return 2.0 * recall * precision / (EPS + recall + precision)
