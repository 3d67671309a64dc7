"""Static SVG figures rendered without a plotting dependency.

Every plot is a pure function of the run logs: identical inputs give
byte-identical SVG, which keeps figures diffable and testable.
"""

import math
from xml.sax.saxutils import escape

from .experiment import ExperimentConfig, aggregate_runs

_WIDTH, _HEIGHT = 640, 420
_MARGIN = {"left": 62, "right": 160, "top": 40, "bottom": 46}

# log-epoch color scale stops, dark to bright
_STOPS = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))

_SERIES_COLORS = {"train": "#1f77b4", "val": "#d62728",
                  "mean_norm": "#1f77b4", "std_norm": "#ff7f0e"}


class MissingSnapshotsError(ValueError):
    """Scheduled MI snapshots are absent from the run logs."""


def _f(x):
    return f"{x:.2f}"


def _epoch_color(epoch, max_epoch):
    t = math.log10(epoch + 1.0) / max(math.log10(max_epoch + 1.0), 1e-12)
    t = min(max(t, 0.0), 1.0) * (len(_STOPS) - 1)
    i = min(int(t), len(_STOPS) - 2)
    frac = t - i
    rgb = [round(a + (b - a) * frac) for a, b in zip(_STOPS[i], _STOPS[i + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


class _Frame:
    """Maps data coordinates into one axes rectangle and draws its chrome."""

    def __init__(self, x0, y0, w, h, xlim, ylim, logx=False):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.logx = logx
        if logx:
            xlim = (math.log10(xlim[0]), math.log10(xlim[1]))
        # degenerate limits (single point) still need a drawable span
        self.xlim = xlim if xlim[1] > xlim[0] else (xlim[0], xlim[0] + 1.0)
        self.ylim = ylim if ylim[1] > ylim[0] else (ylim[0], ylim[0] + 1.0)

    def px(self, x):
        if self.logx:
            x = math.log10(max(x, 1e-300))
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo) * self.h

    def chrome(self, out, xlabel, ylabel, n_ticks=6, tick_font=10):
        out.append(f'<rect x="{_f(self.x0)}" y="{_f(self.y0)}" width="{_f(self.w)}" '
                   f'height="{_f(self.h)}" fill="none" stroke="#333333" stroke-width="1"/>')
        if self.logx:
            lo, hi = self.xlim
            ticks = [10.0 ** k for k in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]
            if not ticks:
                ticks = [10.0 ** lo, 10.0 ** hi]
        else:
            lo, hi = self.xlim
            ticks = [lo + (hi - lo) * i / (n_ticks - 1) for i in range(n_ticks)]
        for tx in ticks:
            x = self.px(tx)
            out.append(f'<line x1="{_f(x)}" y1="{_f(self.y0 + self.h)}" x2="{_f(x)}" '
                       f'y2="{_f(self.y0 + self.h + 4)}" stroke="#333333"/>')
            out.append(f'<text x="{_f(x)}" y="{_f(self.y0 + self.h + 15)}" '
                       f'font-size="{tick_font}" text-anchor="middle">{tx:.4g}</text>')
        lo, hi = self.ylim
        for i in range(n_ticks):
            ty = lo + (hi - lo) * i / (n_ticks - 1)
            y = self.py(ty)
            out.append(f'<line x1="{_f(self.x0 - 4)}" y1="{_f(y)}" x2="{_f(self.x0)}" '
                       f'y2="{_f(y)}" stroke="#333333"/>')
            out.append(f'<text x="{_f(self.x0 - 7)}" y="{_f(y + 3)}" font-size="{tick_font}" '
                       f'text-anchor="end">{ty:.4g}</text>')
        out.append(f'<text x="{_f(self.x0 + self.w / 2)}" y="{_f(self.y0 + self.h + 32)}" '
                   f'font-size="11" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="{_f(self.x0 - 44)}" y="{_f(self.y0 + self.h / 2)}" font-size="11" '
                   f'text-anchor="middle" transform="rotate(-90 {_f(self.x0 - 44)} '
                   f'{_f(self.y0 + self.h / 2)})">{escape(ylabel)}</text>')


def _document(out_body, title, width=_WIDTH, height=_HEIGHT):
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width // 2}" y="22" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif">{escape(title)}</text>',
        '<g font-family="sans-serif" fill="#222222">',
    ]
    return "\n".join(head + out_body + ["</g>", "</svg>"]) + "\n"


def _polyline(pts, color, dashed=False, opacity=1.0):
    coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
    dash = ' stroke-dasharray="5,4"' if dashed else ""
    op = f' stroke-opacity="{opacity}"' if opacity != 1.0 else ""
    return (f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"{dash}{op}/>')


def _tap_label(layer, tap, n_hidden):
    if tap == "softmax":
        return "softmax"
    return f"L{layer} {'bn' if tap == 'post_bn' else 'act'}"


def _select_traces(agg, split, taps):
    """Snapshot points grouped per (layer, tap), output layer first."""
    present = sorted({(s["layer"], s["tap"]) for s in agg.snapshots})
    if taps is None:
        chosen = [(l, t) for l, t in present if t in ("post_act", "softmax")]
    else:
        chosen = [(l, t) for l, t in present if t in taps]
    chosen.sort(key=lambda lt: (-lt[0], lt[1]))  # output-layer trace leftmost/first
    traces = []
    for layer, tap in chosen:
        pts = [(s["epoch"], s["i_tx_mean"], s["i_ty_mean"]) for s in agg.snapshots
               if s["layer"] == layer and s["tap"] == tap and s["split"] == split]
        pts.sort()
        if pts:
            traces.append(((layer, tap), pts))
    return traces


def _check_schedule(agg):
    cfg = ExperimentConfig.from_dict(agg.config)
    wanted = set(cfg.mi_schedule())
    have = {s["epoch"] for s in agg.snapshots}
    missing = sorted(wanted - have)
    if missing:
        raise MissingSnapshotsError(
            f"missing MI snapshots for epochs {missing}")


def plot_information_plane(logs, split="train", taps=None):
    """Scatter of (I(T;X), I(T;Y)) per tap, colored by log-scaled epoch."""
    agg = aggregate_runs(logs)
    _check_schedule(agg)
    traces = _select_traces(agg, split, taps)
    if not traces:
        raise MissingSnapshotsError(f"no MI snapshots for split {split!r}")
    n_split = agg.dataset_meta["n_train" if split == "train" else "n_val"]
    x_max = max(math.ceil(math.log2(n_split)),
                max(p[1] for _, pts in traces for p in pts))
    y_max = max(math.log2(agg.dataset_meta["n_classes"]),
                max(p[2] for _, pts in traces for p in pts))
    max_epoch = max(p[0] for _, pts in traces for p in pts)
    n_hidden = len(agg.config["widths"]) - 2

    fr = _Frame(_MARGIN["left"], _MARGIN["top"],
                _WIDTH - _MARGIN["left"] - _MARGIN["right"],
                _HEIGHT - _MARGIN["top"] - _MARGIN["bottom"],
                (0.0, float(x_max)), (0.0, float(y_max)))
    out = []
    fr.chrome(out, "I(T;X) [bits]", "I(T;Y) [bits]")
    for (layer, tap), pts in traces:
        for epoch, tx, ty in pts:
            out.append(f'<circle cx="{_f(fr.px(tx))}" cy="{_f(fr.py(ty))}" r="2.5" '
                       f'fill="{_epoch_color(epoch, max_epoch)}" fill-opacity="0.85"/>')
    # legend: trace names plus the epoch color bar
    lx = _WIDTH - _MARGIN["right"] + 12
    ly = _MARGIN["top"] + 4
    for i, ((layer, tap), pts) in enumerate(traces):
        y = ly + 16 * i
        out.append(f'<text x="{lx + 14}" y="{y + 4}" font-size="10">'
                   f'{escape(_tap_label(layer, tap, n_hidden))}</text>')
        out.append(f'<circle cx="{lx + 5}" cy="{y}" r="3" fill="#555555"/>')
    bar_y = ly + 16 * len(traces) + 14
    out.append(f'<text x="{lx}" y="{bar_y - 4}" font-size="10">epoch (log)</text>')
    for i in range(60):
        t = i / 59.0
        color = _epoch_color((max_epoch + 1) ** t - 1, max_epoch)
        out.append(f'<rect x="{_f(lx + i * 1.5)}" y="{bar_y}" width="1.6" height="10" '
                   f'fill="{color}"/>')
    out.append(f'<text x="{lx}" y="{bar_y + 22}" font-size="9">0</text>')
    out.append(f'<text x="{_f(lx + 90)}" y="{bar_y + 22}" font-size="9" '
               f'text-anchor="end">{max_epoch}</text>')
    title = (f"information plane ({split}) - {agg.dataset_meta['name']} "
             f"[{agg.config_hash}]")
    return _document(out, title)


_SCALAR_SERIES = {
    "loss": (("train", "train_loss"), ("val", "val_loss")),
    "accuracy": (("train", "train_acc"), ("val", "val_acc")),
    "grad_evolution": (("mean_norm", "grad_mean_norm"), ("std_norm", "grad_std_norm")),
}


def plot_scalar_series(logs, kind):
    """Across-seed mean (solid) and variance (dashed) of a scalar metric."""
    if kind not in _SCALAR_SERIES:
        raise ValueError(f"unknown scalar plot kind {kind!r}")
    agg = aggregate_runs(logs)
    logx = kind == "grad_evolution"
    rows = [r for r in agg.epochs if not logx or r["epoch"] >= 1]
    series = []
    for label, stem in _SCALAR_SERIES[kind]:
        mean = [(r["epoch"], r[stem + "_mean"]) for r in rows if stem + "_mean" in r]
        var = [(r["epoch"], r[stem + "_var"]) for r in rows if stem + "_var" in r]
        series.append((label, mean, var))
    all_vals = [v for _, mean, var in series for _, v in mean + var]
    if not all_vals:
        raise ValueError("no records to plot")
    y_max = max(all_vals) or 1.0
    x_max = max(r["epoch"] for r in rows)

    fr = _Frame(_MARGIN["left"], _MARGIN["top"],
                _WIDTH - _MARGIN["left"] - _MARGIN["right"],
                _HEIGHT - _MARGIN["top"] - _MARGIN["bottom"],
                (1.0 if logx else 0.0, float(max(x_max, 1))),
                (0.0, float(y_max) * 1.05), logx=logx)
    out = []
    fr.chrome(out, "epoch" + (" (log)" if logx else ""), kind.replace("_", " "))
    for label, mean, var in series:
        color = _SERIES_COLORS[label]
        if len(mean) >= 2:
            out.append(_polyline([(fr.px(e), fr.py(v)) for e, v in mean], color))
        if len(var) >= 2:
            out.append(_polyline([(fr.px(e), fr.py(v)) for e, v in var], color,
                                 dashed=True, opacity=0.55))
    lx = _WIDTH - _MARGIN["right"] + 12
    ly = _MARGIN["top"] + 8
    for i, (label, _, _) in enumerate(series):
        color = _SERIES_COLORS[label]
        y = ly + 16 * i
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 16}" y2="{y}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 20}" y="{y + 4}" font-size="10">'
                   f'{escape(label)} (mean)</text>')
    out.append(f'<text x="{lx}" y="{ly + 16 * len(series) + 6}" font-size="9">'
               f'dashed: across-seed variance</text>')
    title = f"{kind} - {agg.dataset_meta['name']} [{agg.config_hash}]"
    return _document(out, title)


def plot_layerwise_panels(logs, split="train"):
    """One small information-plane panel per tap (batchnorm taps included)."""
    agg = aggregate_runs(logs)
    _check_schedule(agg)
    traces = _select_traces(agg, split, taps=("post_bn", "post_act", "softmax"))
    if not traces:
        raise MissingSnapshotsError(f"no MI snapshots for split {split!r}")
    n_hidden = len(agg.config["widths"]) - 2
    max_epoch = max(p[0] for _, pts in traces for p in pts)
    n_split = agg.dataset_meta["n_train" if split == "train" else "n_val"]
    x_max = max(math.ceil(math.log2(n_split)),
                max(p[1] for _, pts in traces for p in pts))
    y_max = max(math.log2(agg.dataset_meta["n_classes"]),
                max(p[2] for _, pts in traces for p in pts))

    pw, ph, gap = 170, 150, 16
    cols = min(4, len(traces))
    rows = (len(traces) + cols - 1) // cols
    width = 40 + cols * (pw + gap)
    height = 50 + rows * (ph + 46)
    out = []
    for i, ((layer, tap), pts) in enumerate(traces):
        cx = 40 + (i % cols) * (pw + gap)
        cy = 40 + (i // cols) * (ph + 46)
        fr = _Frame(cx, cy, pw, ph, (0.0, float(x_max)), (0.0, float(y_max)))
        fr.chrome(out, "I(T;X)", "I(T;Y)", n_ticks=3, tick_font=8)
        out.append(f'<text x="{_f(cx + pw / 2)}" y="{_f(cy - 5)}" font-size="10" '
                   f'text-anchor="middle">{escape(_tap_label(layer, tap, n_hidden))}</text>')
        for epoch, tx, ty in pts:
            out.append(f'<circle cx="{_f(fr.px(tx))}" cy="{_f(fr.py(ty))}" r="2" '
                       f'fill="{_epoch_color(epoch, max_epoch)}" fill-opacity="0.85"/>')
    title = (f"layerwise dynamics ({split}) - {agg.dataset_meta['name']} "
             f"[{agg.config_hash}]")
    return _document(out, title, width=width, height=height)


def render_plot(logs, kind, split="train"):
    """Dispatch on the plot kind named by the CLI."""
    if kind == "info_plane":
        return plot_information_plane(logs, split=split)
    if kind == "layerwise_panels":
        return plot_layerwise_panels(logs, split=split)
    return plot_scalar_series(logs, kind)
