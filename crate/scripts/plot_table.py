"""Plot a CSV table written by `rhs-spectra eval`, `transform` or `evolve`.

    python scripts/plot_table.py eval.csv [out.png]
"""

import sys

import matplotlib.pyplot as plt
import pandas as pd


def main():
    src = sys.argv[1]
    df = pd.read_csv(src)
    fig, ax = plt.subplots(figsize=(7, 4))
    if list(df.columns) == ["E", "rho"]:
        ax.plot(df["E"], df["rho"])
        ax.set_xlabel("E")
        ax.set_ylabel("rho(E)")
    elif "s" in df.columns:
        for (s, ere, eim), g in df.groupby(["s", "Ere", "Eim"]):
            ax.plot(g["r"], g["re"], label=f"Re G, s={s}, E={ere}{eim:+}i")
        ax.set_xlabel("r")
    else:
        x = "E" if "E" in df.columns and "r" not in df.columns else "r"
        keys = [c for c in ("family", "t") if c in df.columns]
        if x == "r" and "E" in df.columns:
            keys.append("E")
        groups = df.groupby(keys) if keys else [((), df)]
        for key, g in groups:
            ax.plot(g[x], g["re"], label=f"Re {key}")
            ax.plot(g[x], g["im"], "--", label=f"Im {key}")
        ax.set_xlabel(x)
    ax.legend(fontsize="small")
    fig.tight_layout()
    if len(sys.argv) > 2:
        fig.savefig(sys.argv[2], dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
