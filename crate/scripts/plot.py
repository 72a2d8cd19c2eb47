#!/usr/bin/env python3
"""Plot qecforge outputs.

    plot.py curve runs/dephasing/curve.csv [--out curve.png]
    plot.py nodes nodes.csv [--out nodes.png]
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_curve(path, out):
    df = pd.read_csv(path)
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    x = df["trial_index"] + 1
    top.plot(x, df["mean_qubits"], lw=1)
    top.fill_between(
        x, df["mean_qubits"] - df["std_qubits"], df["mean_qubits"] + df["std_qubits"], alpha=0.2
    )
    top.set_ylabel("qubits added")
    bottom.plot(x, df["reward_rate"], lw=1)
    bottom.set_ylabel("reward rate")
    bottom.set_xlabel("trial")
    bottom.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_nodes(path, out):
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.errorbar(df["n_edges"], df["p_l"], yerr=df["stderr"], fmt=".", ms=3, alpha=0.5)
    root = df[df["depth"] == 0]
    ax.scatter(root["n_edges"], root["p_l"], color="red", zorder=3, label="root")
    ax.set_xlabel("qubits")
    ax.set_ylabel("P_L")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("kind", choices=["curve", "nodes"])
    parser.add_argument("csv")
    parser.add_argument("--out")
    args = parser.parse_args()
    out = args.out or args.csv.rsplit(".", 1)[0] + ".png"
    {"curve": plot_curve, "nodes": plot_nodes}[args.kind](args.csv, out)
    print(out)


if __name__ == "__main__":
    main()
