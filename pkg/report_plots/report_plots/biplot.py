"""Biplot of the first two principal components: scores plus loading arrows."""

from __future__ import annotations

import argparse
import warnings
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spec import PlotSpec, parse_csv_rows


@dataclass(frozen=True)
class BiplotRender:
    output_path: str
    n_scores: int
    n_arrows: int
    annotated_labels: tuple


def plot_biplot(csv_path: str, spec: PlotSpec) -> BiplotRender:
    """Render a biplot from a CLI-emitted biplot CSV.

    Score rows become a scatter; loading rows become arrows from the origin,
    with labels annotated for rows whose kept flag is 1 (at most
    ``spec.max_labels`` of them, keeping the largest loading norms).  An
    empty kept set still renders a scores-only plot, with a warning.
    """
    spec.validate()
    rows = parse_csv_rows(csv_path, required=("kind", "label", "pc1", "pc2", "kept"))

    scores, loadings = [], []
    for row in rows:
        point = (float(row["pc1"]), float(row["pc2"]))
        if row["kind"] == "score":
            scores.append(point)
        elif row["kind"] == "loading":
            loadings.append((row["label"], point, row["kept"].strip() == "1"))
        else:
            raise ValueError(f"{csv_path}: unknown kind {row['kind']!r}")
    if not scores:
        raise ValueError(f"{csv_path}: no score rows")

    kept = [(lab, pt) for lab, pt, keep in loadings if keep]
    if not kept:
        warnings.warn("no kept labels; rendering a scores-only biplot", stacklevel=2)
    kept.sort(key=lambda item: (-np.hypot(*item[1]), item[0]))
    annotated = kept[: spec.max_labels]

    pts = np.array(scores)
    fig, ax = plt.subplots(figsize=(7.0, 6.0))
    ax.scatter(pts[:, 0], pts[:, 1], s=12, color="#54688c", alpha=0.65, zorder=2)

    if kept:
        # scale arrows to the score cloud so both layers stay visible
        arrow_norm = max(np.hypot(*pt) for _, pt in kept)
        reach = 0.85 * max(np.abs(pts).max(), 1e-12)
        scale = reach / arrow_norm if arrow_norm > 0 else 1.0
        for lab, (x, y) in kept:
            ax.annotate(
                "", xy=(x * scale, y * scale), xytext=(0.0, 0.0),
                arrowprops=dict(arrowstyle="->", color="#b3432b", lw=1.2),
                zorder=3,
            )
        for lab, (x, y) in annotated:
            ax.annotate(lab, xy=(x * scale, y * scale), fontsize=8,
                        color="#7a2f1d", ha="center", va="bottom", zorder=4)

    ax.axhline(0.0, color="0.8", lw=0.6, zorder=1)
    ax.axvline(0.0, color="0.8", lw=0.6, zorder=1)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)

    return BiplotRender(
        output_path=spec.output_path,
        n_scores=len(scores),
        n_arrows=len(kept),
        annotated_labels=tuple(lab for lab, _ in annotated),
    )


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Render a biplot from a biplot-data CSV."
    )
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    parser.add_argument("--title", default="")
    parser.add_argument("--max-labels", type=int, default=40)
    args = parser.parse_args(argv)
    spec = PlotSpec(args.input_csv, args.output_image, args.title, args.max_labels)
    render = plot_biplot(args.input_csv, spec)
    print(f"wrote {render.output_path} ({render.n_scores} scores, "
          f"{render.n_arrows} arrows, {len(render.annotated_labels)} labels)")


if __name__ == "__main__":
    main()
