"""The four figure kinds.

Every draw function takes loaded tables plus label/option mappings and
returns a matplotlib Figure; saving is the caller's job.  Styles are
fixed (no timestamps, no randomized ids) so the same CSVs render the
same bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csvdata import Table, numeric_column
from .errors import SpecError

# applied around draw + save so tick labels created at draw time match
STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.size": 10,
    "axes.titlesize": 11,
    "svg.hashsalt": "ccplots",
}

# log10 |D| spans many orders of magnitude; a fixed clamp keeps region
# maps from different runs comparable
DEFAULT_CLAMP = (-12.0, 2.0)


def _pivot(x, y, values):
    """Scattered (x, y, v) rows onto a dense grid, NaN where absent."""
    xs = np.unique(x)
    ys = np.unique(y)
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    grid = np.full((ys.size, xs.size), np.nan)
    for xv, yv, val in zip(x, y, values):
        grid[yi[yv], xi[xv]] = val
    return xs, ys, grid


def _decorate(ax, labels, default_x, default_y):
    ax.set_xlabel(labels.get("x", default_x))
    ax.set_ylabel(labels.get("y", default_y))
    if labels.get("title"):
        ax.set_title(labels["title"])


def draw_region_map(tables: dict, labels: dict, options: dict):
    """|D| landscape with detected zeros and the fitted boundary curve."""
    rmap = tables["map"]
    zeros = tables["zeros"]
    fit = tables.get("fit")
    half = float(options.get("critical_re", 1.0))
    clamp = options.get("clamp", DEFAULT_CLAMP)
    vmin, vmax = float(clamp[0]), float(clamp[1])
    if not vmin < vmax:
        raise SpecError(f"clamp range ({vmin:g}, {vmax:g}) is empty")

    re = numeric_column(rmap, "re_xi")
    im = numeric_column(rmap, "im_xi")
    mode = numeric_column(rmap, "mode_j")
    absd = numeric_column(rmap, "abs_D")

    # a zero of any retained mode is a resonance, so show the per-point
    # minimum over modes; fmin keeps data where one mode has a NaN strip
    agg = None
    for j in np.unique(mode):
        sel = mode == j
        xs, ys, grid = _pivot(re[sel], im[sel], absd[sel])
        agg = grid if agg is None else np.fmin(agg, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        logd = np.log10(agg)

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("0.85")
    mesh = ax.pcolormesh(xs, ys, logd, shading="nearest", cmap=cmap,
                         vmin=vmin, vmax=vmax)
    fig.colorbar(mesh, ax=ax, label=r"$\log_{10} |D|$")

    if len(zeros):
        zre = numeric_column(zeros, "re_xi")
        zim = numeric_column(zeros, "im_xi")
        ax.plot(zre, zim, "x", color="red", markersize=7,
                label=f"detected zeros ({len(zeros)})")
        if fit is not None and len(fit):
            c1 = float(numeric_column(fit, "C1")[0])
            curve_im = np.linspace(ys.min(), ys.max(), 400)
            curve_re = half - c1 / curve_im
            inside = (curve_re >= xs.min()) & (curve_re <= xs.max())
            ax.plot(np.where(inside, curve_re, np.nan), curve_im,
                    color="orange", linewidth=1.5,
                    label=(rf"fit $\mathrm{{Re}}\,\xi = {half:g} - "
                           rf"{c1:.3g}/\mathrm{{Im}}\,\xi$"))
    else:
        ax.plot([], [], " ", label="no zeros detected; fitted curve omitted")
    ax.legend(loc="upper right", framealpha=0.9)

    ax.set_xlim(xs.min(), xs.max())
    ax.set_ylim(ys.min(), ys.max())
    _decorate(ax, labels, r"$\mathrm{Re}\,\xi$", r"$\mathrm{Im}\,\xi$")
    return fig


def draw_heatmap(tables: dict, labels: dict, options: dict):
    """One bound-ratio panel per bound_id over the (t, Im k) grid."""
    data = tables["data"]
    t = numeric_column(data, "t")
    imk = numeric_column(data, "im_k")
    ratio = numeric_column(data, "ratio")
    bounds = [str(b) for b in np.unique(data["bound_id"])]
    if not bounds or not len(data):
        raise SpecError(f"{data.path.name}: no rows to draw")

    fig, axes = plt.subplots(1, len(bounds), squeeze=False,
                             figsize=(1.0 + 3.4 * len(bounds), 3.8))
    ids = data["bound_id"].astype(str)
    for ax, bound in zip(axes[0], bounds):
        sel = ids == bound
        xs, ys, grid = _pivot(t[sel], imk[sel], ratio[sel])
        mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=labels.get("z", "LHS/RHS"))
        ax.set_title(bound)
        ax.set_xlabel(labels.get("x", "t"))
    axes[0][0].set_ylabel(labels.get("y", r"$\mathrm{Im}\,k$"))
    if labels.get("title"):
        fig.suptitle(labels["title"])
    return fig


def draw_slope(tables: dict, labels: dict, options: dict):
    """Norm against height on log-log axes, one line per (p, q), with
    the fitted slope in the legend."""
    data = tables["data"]
    im = numeric_column(data, "im_xi")
    p = numeric_column(data, "p")
    q = numeric_column(data, "q")
    norm = numeric_column(data, "norm")

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    keys = sorted({(pv, qv) for pv, qv in zip(p, q)})
    for pv, qv in keys:
        sel = (p == pv) & (q == qv) & (norm > 0) & np.isfinite(norm)
        if not sel.any():
            continue
        order = np.argsort(im[sel])
        x, y = im[sel][order], norm[sel][order]
        label = f"p={pv:g}, q={qv:g}"
        if x.size >= 2:
            slope = np.polyfit(np.log10(x), np.log10(y), 1)[0]
            label += f" (slope {slope:+.2f})"
        ax.loglog(x, y, marker="o", label=label)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _decorate(ax, labels, r"$\mathrm{Im}\,\xi$", "weighted norm")
    return fig


def draw_decay(tables: dict, labels: dict, options: dict):
    """Local norm against time on log-log axes with one fitted-slope
    annotation per window; windows the producer left unfitted are
    marked as sitting below its measurement floor."""
    data = tables["data"]
    t = numeric_column(data, "t")
    norm = numeric_column(data, "local_norm")
    wid = numeric_column(data, "window_id")
    expo = numeric_column(data, "fitted_exponent")

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ok = (t > 0) & (norm > 0) & np.isfinite(norm)
    ax.loglog(t[ok], norm[ok], marker=".", color="tab:blue", linewidth=1.0)

    windows = sorted(int(w) for w in np.unique(wid) if w >= 0)
    for count, w in enumerate(windows):
        sel = ok & (wid == w)
        if not sel.any():
            continue
        if count:
            ax.axvline(t[sel].min(), color="0.6", linestyle=":", linewidth=0.8)
        fitted = expo[sel][np.isfinite(expo[sel])]
        note = f"slope {fitted[0]:+.2f}" if fitted.size else "below floor"
        x = float(np.exp(np.mean(np.log(t[sel]))))
        y = float(norm[sel].max()) * 2.0
        ax.annotate(note, (x, y), ha="center", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _decorate(ax, labels, "t", "local energy norm")
    return fig
