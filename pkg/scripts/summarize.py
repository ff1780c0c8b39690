"""Print markdown tables from the ablation, benchmark and dynamics JSON outputs."""

import json
import sys
from pathlib import Path


def fmt(v, spec=".3f"):
    return "n/a" if v is None else format(v, spec)


def main(out_dir="."):
    out = Path(out_dir)
    if (out / "ablation.json").exists():
        t = json.loads((out / "ablation.json").read_text())
        print("| config | dead units | redundancy | entropy | probe |\n|---|---|---|---|---|")
        for name, c in t["configs"].items():
            print(f"| {name} | {c['dead_units_mean']:.1f} | {fmt(c['redundancy_mean'], '.1f')} | "
                  f"{c['resp_entropy_mean']:.3f} | {c['probe_accuracy_mean']:.2%} |")
        print()
    if (out / "benchmark.json").exists():
        t = json.loads((out / "benchmark.json").read_text())
        print("| model | probe | L0 density | params | recon MSE |\n|---|---|---|---|---|")
        for name, m in t["models"].items():
            print(f"| {name} | {m['probe_accuracy_mean']:.2%} ± {m['probe_accuracy_std']:.2%} | "
                  f"{m['l0_density_mean']:.1%} | {m['param_count']} | {m['recon_mse_mean']:.4g} |")
        print()
    if (out / "dynamics.json").exists():
        t = json.loads((out / "dynamics.json").read_text())
        print("| optimizer | lr | final loss | probe |\n|---|---|---|---|")
        for r in t["rows"]:
            print(f"| {r['optimizer']} | {r['lr']:g} | {r['final_loss_mean']:.1f} ± {r['final_loss_std']:.1f} | "
                  f"{r['probe_accuracy_mean']:.2%} ± {r['probe_accuracy_std']:.2%} |")


if __name__ == "__main__":
    main(*sys.argv[1:])
