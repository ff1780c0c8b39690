"""Run configuration, single training runs and the five experiment drivers."""

from __future__ import annotations

import ast
import dataclasses
import hashlib
import inspect
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import Dataset, load_mnist, resolve_data_dir
from .evaluation import ProbeConfig, rep_metrics, reconstruction_mse, train_linear_probe
from .model import (
    EncoderParams,
    encoder_forward,
    pseudo_reconstruct,
    responsibilities,
    sae_encode,
    sae_forward,
)
from .numerics import Rng, logsumexp_neg_rows, softmax_neg_rows
from .objective import ObjectiveConfig, lse_loss_grad
from .training import train_encoder, train_sae
from .viz import export_weight_grid

log = logging.getLogger("lsemix")

ABLATION_CONFIGS = {
    "lse_only": dict(enable_lse=True, enable_var=False, enable_tc=False),
    "lse_var": dict(enable_lse=True, enable_var=True, enable_tc=False),
    "lse_var_tc": dict(enable_lse=True, enable_var=True, enable_tc=True),
    "var_tc_only": dict(enable_lse=False, enable_var=True, enable_tc=True),
}
DYNAMICS_LRS = (1e-4, 1e-3, 1e-2, 1e-1)


@dataclass
class ExperimentConfig:
    model: str = "theory"  # theory | sae
    D: int = 784
    K: int = 64
    epochs: int = 100
    batch_size: int = 128
    optimizer: str = "adam"  # sgd | adam
    lr: float = 1e-3
    lambda_var: float = 1.0
    lambda_tc: float = 1.0
    lambda_wr: float = 0.0
    enable_lse: bool = True
    enable_var: bool = True
    enable_tc: bool = True
    lse_reduction: str = "sum"
    l1_weight: float = 0.01
    sae_l1_reduction: str = "mean"
    seeds: list = field(default_factory=lambda: [0])
    data_dir: str | None = None
    out_dir: str = "runs"
    train_limit: int | None = None
    probe_iters: int = 500
    probe_lr: float = 0.01
    dead_threshold: float = 0.01
    precision: str = "float64"

    def __post_init__(self):
        if self.model not in ("theory", "sae"):
            raise ValueError(f"model must be 'theory' or 'sae', got {self.model!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.K < 1 or self.epochs < 1:
            raise ValueError("K and epochs must be >= 1")
        if self.lse_reduction not in ("sum", "mean") or self.sae_l1_reduction not in ("sum", "mean"):
            raise ValueError("lse_reduction and sae_l1_reduction must be 'sum' or 'mean'")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        self.seeds = [int(s) for s in self.seeds]
        if self.precision != "float64":
            raise ValueError("only float64 precision is supported")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    def objective(self) -> ObjectiveConfig:
        return ObjectiveConfig(
            lambda_var=self.lambda_var, lambda_tc=self.lambda_tc, lambda_wr=self.lambda_wr,
            enable_lse=self.enable_lse, enable_var=self.enable_var, enable_tc=self.enable_tc,
            lse_reduction=self.lse_reduction,
        )

    def training_key(self) -> dict:
        """Fields that determine a run's outcome (paths and seed lists excluded)."""
        d = self.to_dict()
        for k in ("seeds", "data_dir", "out_dir"):
            d.pop(k)
        if self.model == "sae":
            for k in ("lambda_var", "lambda_tc", "lambda_wr", "enable_lse", "enable_var",
                      "enable_tc", "lse_reduction"):
                d.pop(k)
        else:
            d.pop("l1_weight")
            d.pop("sae_l1_reduction")
        return d


def run_name(cfg: ExperimentConfig, seed: int) -> str:
    if cfg.model == "sae":
        tag = f"l1{cfg.l1_weight:g}"
    else:
        tag = "+".join(t for t, on in (("lse", cfg.enable_lse), ("var", cfg.enable_var),
                                       ("tc", cfg.enable_tc)) if on) or "none"
    digest = hashlib.sha256(json.dumps(cfg.training_key(), sort_keys=True).encode()).hexdigest()[:8]
    return f"{cfg.model}-{tag}-{cfg.optimizer}-lr{cfg.lr:g}-seed{seed}-{digest}"


RESULT_MODULES = ("numerics", "model", "objective", "optim", "data", "training", "evaluation")


def _strip_docstrings(tree: ast.AST) -> ast.AST:
    for node in ast.walk(tree):
        body = getattr(node, "body", None)
        if (isinstance(body, list) and body and isinstance(body[0], ast.Expr)
                and isinstance(body[0].value, ast.Constant) and isinstance(body[0].value.value, str)):
            node.body = body[1:] or [ast.Pass()]
    return tree


def code_hash() -> str:
    """Fingerprint of the code that determines run outcomes.

    Hashes the docstring-free AST of each result-affecting module, so edits to
    comments, docs, the CLI or plotting do not invalidate cached runs.
    """
    h = hashlib.sha256()
    pkg = Path(__file__).parent
    for name in RESULT_MODULES:
        tree = _strip_docstrings(ast.parse((pkg / f"{name}.py").read_text()))
        h.update(name.encode())
        h.update(ast.dump(tree).encode())
    h.update(inspect.getsource(run_single).encode())
    return h.hexdigest()[:16]


@dataclass
class RunRecord:
    config: dict
    seed: int
    epochs: list
    metrics: dict
    probe_accuracy: float
    recon_mse: float
    param_count: int
    wall_time: float
    run_dir: str = ""
    code: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return self.epochs[-1]["total"]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))


def load_splits(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    d = resolve_data_dir(cfg.data_dir)
    return load_mnist(d, "train").subset(cfg.train_limit), load_mnist(d, "test")


def _dumps_line(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def run_single(
    cfg: ExperimentConfig,
    seed: int,
    train: Dataset,
    test: Dataset,
    out_dir=None,
    reuse: bool = False,
) -> RunRecord:
    """Train one model for one seed, evaluate it and write its artifacts.

    Writes ``config.json``, ``log.jsonl`` (one line per epoch),
    ``checkpoint.bin`` and ``record.json`` under a per-run directory. With
    ``reuse``, an existing record produced by identical code and training
    settings (paths aside) is returned instead of retraining.
    """
    run_dir = Path(out_dir or cfg.out_dir) / run_name(cfg, seed)
    record_path = run_dir / "record.json"
    run_cfg = cfg.replace(seeds=[seed])
    if reuse and record_path.exists():
        rec = RunRecord.load(record_path)
        same = ExperimentConfig.from_dict(rec.config).training_key() == cfg.training_key()
        if rec.code == code_hash() and same:
            log.info("reusing %s", run_dir)
            return rec
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(run_cfg.to_dict(), sort_keys=True, indent=1) + "\n")

    t0 = time.perf_counter()
    log_path = run_dir / "log.jsonl"
    with open(log_path, "w") as logf:

        def on_epoch(epoch, means):
            logf.write(_dumps_line({"epoch": epoch, **means}))
            logf.flush()
            if epoch == 1 or epoch % 10 == 0 or epoch == cfg.epochs:
                log.info("%s epoch %d total %.4f", run_dir.name, epoch, means["total"])

        common = dict(K=cfg.K, epochs=cfg.epochs, batch_size=cfg.batch_size,
                      optimizer=cfg.optimizer, lr=cfg.lr, seed=seed, on_epoch=on_epoch)
        if cfg.model == "theory":
            params, history = train_encoder(train.images, cfg.objective(), **common)
            epochs = [h.to_dict() for h in history]
        else:
            params, history = train_sae(train.images, cfg.l1_weight, l1_reduction=cfg.sae_l1_reduction, **common)
            epochs = history
    save_checkpoint(params, run_dir / "checkpoint.bin")

    extras = {}
    if cfg.model == "theory":
        f_train = encoder_forward(params, train.images).Dact
        f_test = encoder_forward(params, test.images).Dact
        X_hat = pseudo_reconstruct(params, f_test)
        recon = reconstruction_mse(test.images, X_hat)
        # diagnostic only: MSE after the best single rescaling of the pseudo-decoder output
        denom = float((X_hat * X_hat).sum())
        alpha = float((X_hat * test.images).sum()) / denom if denom > 0 else 0.0
        extras["pseudo_mse_best_scale"] = reconstruction_mse(test.images, alpha * X_hat)
        extras["weight_row_norm_mean"] = float(np.linalg.norm(params.W, axis=1).mean())
    else:
        _, f_train = sae_encode(params, train.images)
        f_test, X_hat = sae_forward(params, test.images)
        recon = reconstruction_mse(test.images, X_hat)
    metrics = rep_metrics(f_test, responsibilities(f_test), cfg.dead_threshold)
    probe = train_linear_probe(
        f_train, train.labels, f_test, test.labels,
        ProbeConfig(max_iter=cfg.probe_iters, lr=cfg.probe_lr),
    )
    extras["probe_iterations"] = probe.iterations
    rec = RunRecord(
        config=run_cfg.to_dict(), seed=seed, epochs=epochs, metrics=metrics.to_dict(),
        probe_accuracy=probe.accuracy, recon_mse=recon, param_count=params.n_params(),
        wall_time=time.perf_counter() - t0, run_dir=str(run_dir), code=code_hash(),
        extras=extras,
    )
    rec.save(record_path)
    return rec


def _mean_std(xs):
    xs = [x for x in xs if x is not None]
    if not xs:
        return None, None
    a = np.asarray(xs, dtype=np.float64)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def _write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")
    return path


# --- experiment 1 -------------------------------------------------------


def complex_step_lse_grad(A: np.ndarray, h: float = 1e-30) -> np.ndarray:
    """Gradient of sum_i -log sum_j exp(-a_ij) by complex-step differentiation.

    Independent of the closed-form softmax: each entry is Im(L(a + ih e_j)) / h,
    which carries no subtractive cancellation.
    """
    B, K = A.shape
    out = np.empty_like(A)
    pert = 1j * h * np.eye(K)
    for i in range(B):
        rows = A[i][None, :] + pert  # K perturbed copies of row i
        m = A[i].min()
        lse = m - np.log(np.exp(-(rows - m)).sum(axis=1))
        out[i] = lse.imag / h
    return out


def cmd_verify_identity(seed: int = 0, B: int = 64, K: int = 128) -> dict:
    """Check that the LSE gradient equals the softmax responsibilities."""
    A = Rng(seed).normal(size=(B, K))
    resp = softmax_neg_rows(A)
    _, g_mean = lse_loss_grad(A)
    grad_closed = B * g_mean  # gradient of the batch-summed loss
    grad_cs = complex_step_lse_grad(A)
    report = {"seed": seed, "B": B, "K": K, "n_values": B * K,
              "loss_sum": float(logsumexp_neg_rows(A).sum())}
    for name, g in (("analytic", grad_closed), ("complex_step", grad_cs)):
        err = np.abs(g - resp)
        report[name] = {
            "max_abs_error": float(err.max()),
            "mean_abs_error": float(err.mean()),
            "correlation": float(np.corrcoef(g.ravel(), resp.ravel())[0, 1]),
        }
    report["max_abs_error"] = max(report["analytic"]["max_abs_error"],
                                  report["complex_step"]["max_abs_error"])
    report["correlation"] = min(report["analytic"]["correlation"],
                                report["complex_step"]["correlation"])
    report["passed"] = report["max_abs_error"] <= 1e-12 and report["correlation"] >= 1 - 1e-12
    return report


# --- experiments 2, 3, 5 -----------------------------------------------


def cmd_train(cfg: ExperimentConfig, seed: int | None = None, splits=None, reuse=False) -> RunRecord:
    train, test = splits or load_splits(cfg)
    return run_single(cfg, cfg.seeds[0] if seed is None else seed, train, test, reuse=reuse)


def _metric_summary(records: list[RunRecord]) -> dict:
    dead = [r.metrics["dead_units"] for r in records]
    red = [r.metrics["redundancy"] for r in records]
    ent = [r.metrics["resp_entropy"] for r in records]
    return {
        "dead_units_mean": float(np.mean(dead)),
        "dead_units_max": int(max(dead)),
        "dead_units_min": int(min(dead)),
        # redundancy is undefined when fewer than two units survive
        "redundancy_mean": _mean_std(red)[0] if all(v is not None for v in red) else None,
        "redundancy_defined_runs": sum(v is not None for v in red),
        "resp_entropy_mean": float(np.mean(ent)),
        "probe_accuracy_mean": float(np.mean([r.probe_accuracy for r in records])),
        "l0_density_mean": float(np.mean([r.metrics["l0_density"] for r in records])),
    }


def cmd_ablation(cfg: ExperimentConfig, splits=None, reuse=False) -> dict:
    """The four loss-flag configurations, each over every seed."""
    train, test = splits or load_splits(cfg)
    table = {"K": cfg.K, "seeds": cfg.seeds, "configs": {}}
    for name, flags in ABLATION_CONFIGS.items():
        c = cfg.replace(model="theory", **flags)
        recs = [run_single(c, s, train, test, reuse=reuse) for s in cfg.seeds]
        table["configs"][name] = {
            "flags": flags,
            **_metric_summary(recs),
            "runs": [{"seed": r.seed, **r.metrics, "probe_accuracy": r.probe_accuracy,
                      "final_loss": r.final_loss, "run_dir": r.run_dir} for r in recs],
        }
    _write_json(table, Path(cfg.out_dir) / "ablation.json")
    return table


def cmd_benchmark(cfg: ExperimentConfig, splits=None, reuse=False) -> dict:
    """Theory encoder against the SAE baseline over every seed."""
    train, test = splits or load_splits(cfg)
    table = {"seeds": cfg.seeds, "models": {}}
    for model in ("theory", "sae"):
        c = cfg.replace(model=model)
        recs = [run_single(c, s, train, test, reuse=reuse) for s in cfg.seeds]
        acc_m, acc_s = _mean_std([r.probe_accuracy for r in recs])
        mse_m, mse_s = _mean_std([r.recon_mse for r in recs])
        entry = {
            "probe_accuracy_mean": acc_m, "probe_accuracy_std": acc_s,
            "l0_density_mean": float(np.mean([r.metrics["l0_density"] for r in recs])),
            "l0_mean_active": float(np.mean([r.metrics["l0_mean_active"] for r in recs])),
            "param_count": recs[0].param_count,
            "recon_mse_mean": mse_m, "recon_mse_std": mse_s,
            "dead_units_mean": float(np.mean([r.metrics["dead_units"] for r in recs])),
            "runs": [{"seed": r.seed, "run_dir": r.run_dir, "probe_accuracy": r.probe_accuracy,
                      "recon_mse": r.recon_mse, **r.metrics, **r.extras} for r in recs],
        }
        if model == "theory":
            entry["pseudo_mse_best_scale_mean"] = float(
                np.mean([r.extras["pseudo_mse_best_scale"] for r in recs]))
        table["models"][model] = entry
    _write_json(table, Path(cfg.out_dir) / "benchmark.json")
    return table


def cmd_dynamics(cfg: ExperimentConfig, splits=None, reuse=False, lrs=DYNAMICS_LRS) -> dict:
    """SGD and Adam across the learning-rate grid on the full objective."""
    train, test = splits or load_splits(cfg)
    rows = []
    for opt in ("sgd", "adam"):
        for lr in lrs:
            c = cfg.replace(model="theory", optimizer=opt, lr=lr,
                            enable_lse=True, enable_var=True, enable_tc=True)
            recs = [run_single(c, s, train, test, reuse=reuse) for s in cfg.seeds]
            loss_m, loss_s = _mean_std([r.final_loss for r in recs])
            acc_m, acc_s = _mean_std([r.probe_accuracy for r in recs])
            rows.append({
                "optimizer": opt, "lr": lr,
                "final_loss_mean": loss_m, "final_loss_std": loss_s,
                "probe_accuracy_mean": acc_m, "probe_accuracy_std": acc_s,
                "trajectories": {str(r.seed): [e["total"] for e in r.epochs] for r in recs},
            })
    table = {"seeds": cfg.seeds, "rows": rows}
    _write_json(table, Path(cfg.out_dir) / "dynamics.json")
    return table


def dynamics_row(table: dict, optimizer: str, lr: float) -> dict:
    for row in table["rows"]:
        if row["optimizer"] == optimizer and np.isclose(row["lr"], lr):
            return row
    raise KeyError((optimizer, lr))


# --- experiment 4 -------------------------------------------------------


def cmd_visualize(checkpoint, out_path, tiles_per_row: int = 8, separator_px: int = 2) -> Path:
    params = load_checkpoint(checkpoint)
    W = params.W if isinstance(params, EncoderParams) else params.W_enc
    return export_weight_grid(W, out_path, tiles_per_row, separator_px)
