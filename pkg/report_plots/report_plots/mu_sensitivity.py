"""Log-x line plot of orthonormality deviation against the coupling weight mu."""

from __future__ import annotations

import argparse
import warnings
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spec import PlotSpec, parse_csv_rows

#: Reference coupling weight annotated on the curve when present.
REFERENCE_MU = 1000.0


@dataclass(frozen=True)
class MuRender:
    output_path: str
    mus: tuple
    max_devs: tuple
    annotated_reference: bool


def plot_mu_sensitivity(csv_path: str, spec: PlotSpec) -> MuRender:
    """Render max ||V'V - I|| against mu from a (mu, max_dev) CSV.

    A non-monotone mu column is sorted (with a warning); duplicated mu values
    are averaged.  The reference point mu=1000 is annotated when present.
    """
    spec.validate()
    rows = parse_csv_rows(csv_path, required=("mu", "max_dev"))
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    mus = np.array([float(r["mu"]) for r in rows])
    devs = np.array([float(r["max_dev"]) for r in rows])
    if np.any(mus <= 0):
        raise ValueError(f"{csv_path}: mu values must be positive for a log axis")

    if np.any(np.diff(mus) < 0):
        warnings.warn("mu column is not sorted; sorting before plotting", stacklevel=2)
        order = np.argsort(mus, kind="stable")
        mus, devs = mus[order], devs[order]

    uniq = np.unique(mus)
    if len(uniq) < len(mus):
        # reduction rule: duplicated mu values are averaged
        devs = np.array([devs[mus == m].mean() for m in uniq])
        mus = uniq

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    marker_only = len(mus) == 1
    ax.plot(mus, devs, marker="o", ms=4.5, lw=0.0 if marker_only else 1.3,
            color="#2a5d8f")
    ax.set_xscale("log")
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel(r"max $|V^\top V - I|$")
    annotated = False
    if REFERENCE_MU in mus:
        i = int(np.flatnonzero(mus == REFERENCE_MU)[0])
        ax.scatter([mus[i]], [devs[i]], s=55, facecolor="none",
                   edgecolor="#b3432b", zorder=3)
        ax.annotate(f"$\\mu$={REFERENCE_MU:g}: {devs[i]:.2e}",
                    xy=(mus[i], devs[i]), xytext=(8, 10),
                    textcoords="offset points", fontsize=8, color="#7a2f1d")
        annotated = True
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)

    return MuRender(
        output_path=spec.output_path,
        mus=tuple(float(m) for m in mus),
        max_devs=tuple(float(v) for v in devs),
        annotated_reference=annotated,
    )


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Render a mu-sensitivity plot from a (mu, max_dev) CSV."
    )
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    spec = PlotSpec(args.input_csv, args.output_image, args.title)
    render = plot_mu_sensitivity(args.input_csv, spec)
    print(f"wrote {render.output_path} ({len(render.mus)} points, "
          f"reference annotated: {render.annotated_reference})")


if __name__ == "__main__":
    main()
