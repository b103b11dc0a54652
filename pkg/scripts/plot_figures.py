"""Render empirical-vs-SE curves from CSVs written by ``ampsi run``.

    python scripts/plot_figures.py out/fig1_gg_n100 out/fig1_gg_n10000 -o fig1.png

Each argument is an output prefix; its ``.se.csv`` supplies the mean
empirical MSE (markers, with standard-error bars) and the SE prediction
(line).  Needs matplotlib, which the library itself does not use.
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ampsi.experiment import read_csv


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("prefixes", nargs="+")
    p.add_argument("-o", "--output", default="figure.png")
    p.add_argument("--log", action="store_true", help="logarithmic MSE axis")
    args = p.parse_args(argv)
    fig, ax = plt.subplots(figsize=(5, 4))
    for prefix in args.prefixes:
        se = read_csv(prefix + ".se.csv")
        label = prefix.rsplit("/", 1)[-1]
        line = ax.plot(se["iter"], se["pred_mse"], "-", label=f"{label} SE")[0]
        ax.errorbar(se["iter"], se["emp_mean_mse"], yerr=se["emp_stderr"], fmt="o", ms=3,
                    color=line.get_color(), label=f"{label} empirical")
    ax.set_xlabel("iteration")
    ax.set_ylabel("MSE")
    if args.log:
        ax.set_yscale("log")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)
    print(args.output)


if __name__ == "__main__":
    main()
