"""Plot loss trajectories from dynamics.json (needs matplotlib: pip install .[plot])."""

import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("dynamics_json", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("dynamics.png"))
    args = ap.parse_args()
    table = json.loads(args.dynamics_json.read_text())

    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, opt in zip(axes, ("sgd", "adam")):
        for row in (r for r in table["rows"] if r["optimizer"] == opt):
            for i, traj in enumerate(row["trajectories"].values()):
                ax.plot(range(1, len(traj) + 1), traj, color=f"C{table['rows'].index(row) % 4}",
                        alpha=0.7, label=f"lr={row['lr']:g}" if i == 0 else None)
        ax.set_title(opt.upper())
        ax.set_xlabel("epoch")
        ax.legend()
    axes[0].set_ylabel("epoch-mean total loss")
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(args.output)


if __name__ == "__main__":
    main()
