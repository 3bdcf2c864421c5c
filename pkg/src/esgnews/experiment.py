"""Training protocol: seeded splits, early stopping, LR decay, baselines,
market-cap breakdowns, and the row-subset ablation.

Everything here is deterministic given a ``TrainConfig``: one root seed
sequence per protocol spawns independent child streams for each run's split,
weight init, batch shuffling, and the random baseline, so two invocations
with the same config produce byte-identical JSON reports.  Runs are mutually
independent and could execute in parallel; they are kept serial so the
report is reproducible without any ordering merge.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .catalog import CapBand
from .corpus import ArticleRecord
from .features import CompanyYearSeries, apply_scaler, fit_scaler
from .models import Arch, Head, ModelSpec, Network, build, predict_ratings, quantize_target
from .neuro import RAdam, mape_details, mse, scce, scce_loss, mse_loss, sparse_accuracy

__all__ = [
    "TrainConfig",
    "ControllerDecision",
    "TrainingController",
    "History",
    "Split",
    "split_indices",
    "train",
    "AbsDiffMetrics",
    "abs_diff_metrics",
    "baseline_mean",
    "baseline_random",
    "baseline_sokolov",
    "sokolov_from_records",
    "EvalReport",
    "run_protocol",
    "ablation",
    "ABLATION_SUBSETS",
    "epochs_for",
]


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 25
    deep_regression_epochs: int = 50  # the 3-block transformer regressor trains longer
    batch_size: int = 16
    lr: float = 1e-3
    es_patience: int = 5
    lr_patience: int = 5
    lr_factor: float = 0.1
    lr_min_delta: float = 0.01
    split_seed: int = 0
    train_fraction: float = 0.8
    val_fraction_of_train: float = 0.2
    n_runs: int = 10

    def __post_init__(self) -> None:
        for name in ("train_fraction", "val_fraction_of_train"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.es_patience < 1 or self.lr_patience < 1:
            raise ValueError("patience must be at least 1")
        if self.max_epochs < 1 or self.deep_regression_epochs < 1:
            raise ValueError("epoch budgets must be positive")
        if self.batch_size < 2:
            # batch-norm train mode needs at least 2 samples per batch
            raise ValueError("batch_size must be at least 2")
        if self.lr <= 0.0 or self.lr_factor <= 0.0 or self.lr_factor >= 1.0:
            raise ValueError("lr must be positive and lr_factor in (0, 1)")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")


def epochs_for(spec: ModelSpec, cfg: TrainConfig) -> int:
    if spec.arch is Arch.CNN_DEEP_TRANSFORMER and spec.head is Head.REGRESSION:
        return cfg.deep_regression_epochs
    return cfg.max_epochs


class ControllerDecision(NamedTuple):
    new_best: bool
    lr_reduced: bool
    stop: bool


class TrainingController:
    """Early stopping + LR schedule as a pure function of the validation-loss
    sequence, so it can be exercised with scripted inputs.

    Stopping: the run ends once ``es_patience`` consecutive epochs fail to
    strictly improve on the best loss seen so far.  LR: each epoch whose
    improvement over the *previous* epoch falls below ``lr_min_delta`` bumps a
    counter (a worse epoch counts too); at ``lr_patience`` the rate is
    multiplied by ``lr_factor`` and the counter resets.  The first epoch only
    establishes the comparison baseline.
    """

    def __init__(self, lr: float, es_patience: int = 5, lr_patience: int = 5,
                 lr_factor: float = 0.1, lr_min_delta: float = 0.01) -> None:
        self.lr = lr
        self.es_patience = es_patience
        self.lr_patience = lr_patience
        self.lr_factor = lr_factor
        self.lr_min_delta = lr_min_delta
        self.epoch = 0
        self.best_loss = float("inf")
        self.best_epoch = 0
        self._prev: float | None = None
        self._es_count = 0
        self._lr_count = 0

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "TrainingController":
        return cls(cfg.lr, cfg.es_patience, cfg.lr_patience, cfg.lr_factor, cfg.lr_min_delta)

    def observe(self, val_loss: float) -> ControllerDecision:
        self.epoch += 1
        new_best = val_loss < self.best_loss
        if new_best:
            self.best_loss = val_loss
            self.best_epoch = self.epoch
            self._es_count = 0
        else:
            self._es_count += 1

        lr_reduced = False
        if self._prev is not None:
            if self._prev - val_loss < self.lr_min_delta:
                self._lr_count += 1
            else:
                self._lr_count = 0
            if self._lr_count >= self.lr_patience:
                self.lr *= self.lr_factor
                self._lr_count = 0
                lr_reduced = True
        self._prev = val_loss

        return ControllerDecision(new_best, lr_reduced, self._es_count >= self.es_patience)


@dataclass
class History:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.val_losses)

    def as_dict(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "lrs": self.lrs,
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "epochs_run": self.epochs_run,
        }


def _quantized(y: np.ndarray, n_classes: int) -> np.ndarray:
    return np.array([quantize_target(float(t), n_classes) for t in y], dtype=np.int64)


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    out = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if len(out) > 1 and len(out[-1]) == 1:
        # a lone trailing sample cannot go through batch-norm in train mode
        out[-2] = np.concatenate([out[-2], out[-1]])
        out.pop()
    return out


def train(
    network: Network,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    cfg: TrainConfig,
    *,
    max_epochs: int | None = None,
    shuffle_rng: np.random.Generator | None = None,
) -> History:
    """Fit ``network`` in place on rating targets in [0, 100]; returns the
    per-epoch history.  The weights (and batch-norm statistics) of the best
    validation epoch are restored at the end."""
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    x_val = np.asarray(x_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("training and validation splits must both be non-empty")
    if len(x_train) != len(y_train) or len(x_val) != len(y_val):
        raise ValueError("feature/target length mismatch")

    classification = network.spec.head is Head.CLASSIFICATION
    if classification:
        classes_train = _quantized(y_train, network.spec.n_classes)
        classes_val = _quantized(y_val, network.spec.n_classes)

    if max_epochs is None:
        max_epochs = epochs_for(network.spec, cfg)
    if shuffle_rng is None:
        shuffle_rng = np.random.default_rng(cfg.split_seed)

    controller = TrainingController.from_config(cfg)
    optimizer = RAdam(network.params(), lr=cfg.lr)
    best = network.snapshot()
    history = History()

    for _ in range(max_epochs):
        order = shuffle_rng.permutation(len(x_train))
        total = 0.0
        for batch in _batches(order, cfg.batch_size):
            out = network.forward(x_train[batch], train=True)
            if classification:
                loss = scce_loss(out, classes_train[batch])
            else:
                loss = mse_loss(out, y_train[batch][:, None])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.data) * len(batch)
        train_loss = total / len(x_train)

        val_out = network.forward(x_val, train=False).data
        if classification:
            val_loss = scce(val_out, classes_val)
        else:
            val_loss = mse(val_out[:, 0], y_val)

        lr_used = optimizer.lr
        decision = controller.observe(val_loss)
        history.train_losses.append(train_loss)
        history.val_losses.append(val_loss)
        history.lrs.append(lr_used)
        if decision.new_best:
            best = network.snapshot()
        if decision.lr_reduced:
            optimizer.lr = controller.lr
        if decision.stop:
            history.stopped_early = True
            break

    network.restore(best)
    history.best_epoch = controller.best_epoch
    return history


# --- metrics and baselines -------------------------------------------------

@dataclass(frozen=True)
class AbsDiffMetrics:
    mean: float
    std: float
    max: float
    n: int
    degenerate_std: bool  # n == 1: std reported as 0

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "max": self.max,
            "n": self.n,
            "degenerate_std": self.degenerate_std,
        }


def abs_diff_metrics(predictions: Sequence[float], targets: Sequence[float]) -> AbsDiffMetrics:
    """Mean / sample std (n−1) / max of |target − prediction|."""
    preds = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targs = np.asarray(targets, dtype=np.float64).reshape(-1)
    if preds.shape != targs.shape:
        raise ValueError(f"length mismatch: {preds.shape[0]} predictions vs {targs.shape[0]} targets")
    if len(preds) == 0:
        raise ValueError("cannot score an empty prediction set")
    diffs = np.abs(targs - preds)
    degenerate = len(diffs) == 1
    std = 0.0 if degenerate else float(diffs.std(ddof=1))
    return AbsDiffMetrics(float(diffs.mean()), std, float(diffs.max()), len(diffs), degenerate)


def baseline_mean(train_targets: Sequence[float]) -> float:
    """The constant predictor: mean of the training targets."""
    targets = np.asarray(train_targets, dtype=np.float64)
    if len(targets) == 0:
        raise ValueError("mean baseline needs a non-empty training set")
    return float(targets.mean())


def baseline_random(n: int, rng: np.random.Generator | int) -> np.ndarray:
    """n independent uniform draws on [0, 100]."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.uniform(0.0, 100.0, size=n)


def baseline_sokolov(probs_by_bucket: Mapping[Hashable, Sequence[float]]) -> float:
    """Two-level average of relevance probabilities: rating = 100 × mean over
    buckets (days, or months at month resolution) of each bucket's mean
    probability.  Buckets without articles simply do not appear."""
    bucket_means = [
        float(np.mean(np.asarray(probs, dtype=np.float64)))
        for probs in probs_by_bucket.values()
        if len(probs) > 0
    ]
    if not bucket_means:
        raise ValueError("no probability-bearing articles in any bucket")
    return 100.0 * float(np.mean(bucket_means))


def sokolov_from_records(
    records: Iterable[ArticleRecord],
) -> tuple[dict[str, float], list[str]]:
    """Per-company ratings from labeled article records, bucketed by month.

    Returns (scores, excluded): companies with records but no relevance
    probabilities anywhere are excluded and reported.
    """
    by_company: dict[str, dict] = {}
    for rec in records:
        buckets = by_company.setdefault(rec.company_id, {})
        if rec.relevance_prob is not None:
            buckets.setdefault(rec.month, []).append(rec.relevance_prob)
        else:
            buckets.setdefault(rec.month, [])
    scores: dict[str, float] = {}
    excluded: list[str] = []
    for company_id in sorted(by_company):
        buckets = by_company[company_id]
        if any(len(v) > 0 for v in buckets.values()):
            scores[company_id] = baseline_sokolov(buckets)
        else:
            excluded.append(company_id)
    return scores, excluded


# --- protocol ---------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    train: np.ndarray  # the full training side (fit + val)
    fit: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_indices(
    n: int, train_fraction: float, val_fraction_of_train: float, rng: np.random.Generator
) -> Split:
    """Random disjoint covering split; sizes match the fractions to ±1 sample
    with every part non-empty."""
    if n < 3:
        raise ValueError(f"need at least 3 samples to split, got {n}")
    perm = rng.permutation(n)
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 2), n - 1)
    n_val = int(round(val_fraction_of_train * n_train))
    n_val = min(max(n_val, 1), n_train - 1)
    train = perm[:n_train]
    return Split(train=train, fit=train[: n_train - n_val], val=train[n_train - n_val:],
                 test=perm[n_train:])


def _model_key(spec: ModelSpec) -> str:
    return f"{spec.arch.value}/{spec.head.value}"


def _band_rows(preds: np.ndarray, targets: np.ndarray, bands: Sequence[CapBand]) -> dict:
    out: dict[str, dict] = {}
    diffs = np.abs(targets - preds)
    for band in CapBand:
        mask = np.array([b is band for b in bands])
        if mask.any():
            out[band.value] = {"mean_abs_diff": float(diffs[mask].mean()), "n": int(mask.sum())}
    return out


def _head_metrics_model(spec: ModelSpec, raw_out: np.ndarray, preds: np.ndarray,
                        targets: np.ndarray) -> dict:
    if spec.head is Head.CLASSIFICATION:
        classes = _quantized(targets, spec.n_classes)
        return {"accuracy": sparse_accuracy(raw_out, classes), "scce": scce(raw_out, classes)}
    mape_value, excluded = mape_details(preds, targets)
    return {"mape": mape_value, "mape_excluded": excluded, "mse": mse(preds, targets)}


def _head_metrics_baseline(preds: np.ndarray, targets: np.ndarray, n_classes: int) -> dict:
    acc = float(np.mean(_quantized(np.clip(preds, 0.0, 100.0), n_classes)
                        == _quantized(targets, n_classes)))
    mape_value, excluded = mape_details(preds, targets)
    return {"accuracy": acc, "mape": mape_value, "mape_excluded": excluded,
            "mse": mse(preds, targets)}


def _mean_over_runs(entries: list[dict]) -> dict:
    """Mean of every numeric leaf across per-run dicts of identical shape;
    booleans aggregate to a count."""
    out: dict = {}
    first = entries[0]
    for key, value in first.items():
        values = [e[key] for e in entries]
        if isinstance(value, bool):
            out[key if key.endswith("_runs") else f"{key}_runs"] = int(sum(values))
        elif isinstance(value, dict):
            out[key] = _mean_over_runs(values)
        else:
            out[key] = float(np.mean(values))
    return out


def _aggregate_bands(per_run_bands: list[dict]) -> dict:
    out: dict[str, dict] = {}
    for band in [b.value for b in CapBand]:
        present = [r[band] for r in per_run_bands if band in r]
        if present:
            out[band] = {
                "mean_abs_diff": float(np.mean([p["mean_abs_diff"] for p in present])),
                "n_total": int(sum(p["n"] for p in present)),
                "runs": len(present),
            }
    return out


def run_protocol(
    series: Sequence[CompanyYearSeries],
    specs: Sequence[ModelSpec],
    cfg: TrainConfig,
    *,
    sokolov_scores: Mapping[str, float] | None = None,
) -> "EvalReport":
    """The full repeated-split protocol.

    Per run: draw a fresh train/test split, carve validation out of the train
    side, fit the scaler on the train side only, train every spec from a
    fresh seed, evaluate on the held-out test companies, and score the
    baselines on the identical split.  Aggregates are arithmetic means over
    runs.
    """
    if not series:
        raise ValueError("empty dataset")
    if not specs:
        raise ValueError("no model specs given")
    rows = series[0].matrix.shape[0]
    for s in series:
        if s.matrix.shape[0] != rows:
            raise ValueError("all series must share one row layout")
        if s.scaled:
            raise ValueError(
                f"series for {s.company_id!r} is already scaled; the protocol fits "
                "its own scaler per split"
            )
        if not np.isfinite(s.target) or not 0.0 <= s.target <= 100.0:
            raise ValueError(f"target for {s.company_id!r} outside [0, 100]")
    keys = [_model_key(spec) for spec in specs]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate model specs")

    targets = np.array([s.target for s in series], dtype=np.float64)
    bands = [s.cap_band for s in series]
    ids = [s.company_id for s in series]

    root = np.random.SeedSequence(cfg.split_seed)
    run_seeds = root.spawn(cfg.n_runs)
    runs: list[dict] = []
    sokolov_key = "sokolov" if sokolov_scores is not None else None

    for r in range(cfg.n_runs):
        split_ss, baseline_ss, models_ss = run_seeds[r].spawn(3)
        split = split_indices(len(series), cfg.train_fraction, cfg.val_fraction_of_train,
                              np.random.default_rng(split_ss))
        scaler = fit_scaler([series[i] for i in split.train])
        scaled = np.stack([apply_scaler(scaler, s).matrix for s in series])

        x_fit, y_fit = scaled[split.fit], targets[split.fit]
        x_val, y_val = scaled[split.val], targets[split.val]
        x_test, y_test = scaled[split.test], targets[split.test]
        test_bands = [bands[i] for i in split.test]

        entry: dict = {"run": r, "models": {}, "baselines": {}}
        spec_seeds = models_ss.spawn(len(specs))
        for spec, key, spec_ss in zip(specs, keys, spec_seeds):
            weight_ss, shuffle_ss = spec_ss.spawn(2)
            network = build(spec, input_rows=rows, seed=int(weight_ss.generate_state(1)[0]))
            history = train(network, x_fit, y_fit, x_val, y_val, cfg,
                            shuffle_rng=np.random.default_rng(shuffle_ss))
            raw_out = network.forward(x_test, train=False).data
            preds = predict_ratings(network, x_test)
            entry["models"][key] = {
                "abs_diff": abs_diff_metrics(preds, y_test).as_dict(),
                "head": _head_metrics_model(spec, raw_out, preds, y_test),
                "bands": _band_rows(preds, y_test, test_bands),
                "epochs_run": history.epochs_run,
                "best_epoch": history.best_epoch,
            }

        n_classes = specs[0].n_classes
        mean_pred = baseline_mean(targets[split.train])
        mean_preds = np.full(len(split.test), mean_pred)
        random_preds = baseline_random(len(split.test), np.random.default_rng(baseline_ss))
        entry["baselines"]["mean"] = {
            "abs_diff": abs_diff_metrics(mean_preds, y_test).as_dict(),
            "head": _head_metrics_baseline(mean_preds, y_test, n_classes),
        }
        entry["baselines"]["random"] = {
            "abs_diff": abs_diff_metrics(random_preds, y_test).as_dict(),
            "head": _head_metrics_baseline(random_preds, y_test, n_classes),
        }
        if sokolov_key:
            covered = [j for j, i in enumerate(split.test) if ids[i] in sokolov_scores]
            missing = len(split.test) - len(covered)
            if covered:
                sk_preds = np.array([sokolov_scores[ids[split.test[j]]] for j in covered])
                sk_targets = y_test[covered]
                entry["baselines"][sokolov_key] = {
                    "abs_diff": abs_diff_metrics(sk_preds, sk_targets).as_dict(),
                    "head": _head_metrics_baseline(sk_preds, sk_targets, n_classes),
                    "missing": missing,
                }
        runs.append(entry)

    aggregate = {"models": {}, "baselines": {}}
    for key in keys:
        per_run = [r["models"][key] for r in runs]
        agg = _mean_over_runs([{k: v for k, v in e.items() if k != "bands"} for e in per_run])
        agg["bands"] = _aggregate_bands([e["bands"] for e in per_run])
        aggregate["models"][key] = agg
    for name in ["mean", "random"] + ([sokolov_key] if sokolov_key else []):
        present = [r["baselines"][name] for r in runs if name in r["baselines"]]
        if present:
            aggregate["baselines"][name] = _mean_over_runs(present)

    payload = {
        "protocol": {
            "config": asdict(cfg),
            "n_companies": len(series),
            "input_rows": rows,
            "years": sorted({s.year for s in series}),
            "model_keys": keys,
            "baseline_keys": ["mean", "random"] + ([sokolov_key] if sokolov_key else []),
        },
        "runs": runs,
        "aggregate": aggregate,
    }
    return EvalReport(payload)


ABLATION_SUBSETS: tuple[tuple[str, tuple[int, ...]], ...] = (
    ("relevance", (0,)),
    ("sentiment", (1, 2)),
    ("semantic", (3, 4, 5, 6, 7, 8)),
    ("all", tuple(range(9))),
)


def ablation(
    series: Sequence[CompanyYearSeries],
    cfg: TrainConfig,
    spec: ModelSpec | None = None,
) -> "EvalReport":
    """Re-run the protocol on four input-row subsets (relevance ratio only /
    sentiment ratios only / cluster counts only / everything) with identical
    splits, so the rows are comparable."""
    if not series or series[0].matrix.shape[0] != 9:
        raise ValueError("ablation requires the full 9-row layout")
    if spec is None:
        spec = ModelSpec(Arch.DEEP_CNN, Head.REGRESSION)
    key = _model_key(spec)

    subsets: dict[str, dict] = {}
    for name, rows in ABLATION_SUBSETS:
        sliced = [replace(s, matrix=s.matrix[list(rows), :]) for s in series]
        report = run_protocol(sliced, [spec], cfg)
        subsets[name] = {
            "rows": list(rows),
            "aggregate": report.payload["aggregate"]["models"][key],
            "per_run_mean_abs_diff": [
                r["models"][key]["abs_diff"]["mean"] for r in report.payload["runs"]
            ],
        }

    payload = {
        "ablation": {
            "model": key,
            "config": asdict(cfg),
            "n_companies": len(series),
            "order": [name for name, _ in ABLATION_SUBSETS],
            "subsets": subsets,
        }
    }
    return EvalReport(payload)


# --- report rendering -------------------------------------------------------

_BAND_ORDER = (CapBand.SMALL, CapBand.MID, CapBand.LARGE)


@dataclass(frozen=True)
class EvalReport:
    payload: dict

    def to_json(self) -> str:
        return json.dumps(self.payload, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        if "ablation" in self.payload:
            return self._ablation_text()
        return self._protocol_text()

    def _protocol_text(self) -> str:
        proto = self.payload["protocol"]
        cfg = proto["config"]
        agg = self.payload["aggregate"]
        lines = [
            f"evaluation over {cfg['n_runs']} runs — {proto['n_companies']} companies, "
            f"{proto['input_rows']} input rows",
            f"train/test split {cfg['train_fraction']:.2f}/{1 - cfg['train_fraction']:.2f}, "
            f"validation {cfg['val_fraction_of_train']:.2f} of train",
            "",
            f"{'model':<34}{'mean':>8}{'std':>8}{'max':>8}"
            f"{'acc':>8}{'scce':>8}{'mape':>9}{'mse':>10}",
        ]

        def fmt(value, width: int, decimals: int = 2) -> str:
            if value is None:
                return f"{'-':>{width}}"
            return f"{value:>{width}.{decimals}f}"

        def row(label: str, entry: dict) -> str:
            head = entry["head"]
            ad = entry["abs_diff"]
            return (
                f"{label:<34}"
                + fmt(ad["mean"], 8) + fmt(ad["std"], 8) + fmt(ad["max"], 8)
                + fmt(head.get("accuracy"), 8) + fmt(head.get("scce"), 8)
                + fmt(head.get("mape"), 9) + fmt(head.get("mse"), 10)
            )

        for key in proto["model_keys"]:
            lines.append(row(key, agg["models"][key]))
        for name in proto["baseline_keys"]:
            if name in agg["baselines"]:
                lines.append(row(f"baseline/{name}", agg["baselines"][name]))

        band_header = "".join(f"{band.value:>18}" for band in _BAND_ORDER)
        lines += ["", "mean absolute difference by market-cap band",
                  f"{'model':<34}{band_header}"]
        for key in proto["model_keys"]:
            cells = []
            for band in _BAND_ORDER:
                info = agg["models"][key]["bands"].get(band.value)
                cells.append(
                    f"{'-':>18}" if info is None
                    else f"{info['mean_abs_diff']:>10.2f} (n={info['n_total']:>3d})"
                )
            lines.append(f"{key:<34}" + "".join(cells))
        return "\n".join(lines) + "\n"

    def _ablation_text(self) -> str:
        abl = self.payload["ablation"]
        lines = [
            f"input-row ablation — {abl['model']} on {abl['n_companies']} companies, "
            f"{abl['config']['n_runs']} runs",
            "",
            f"{'subset':<14}{'rows':>6}{'mean':>10}{'std':>10}{'max':>10}",
        ]
        for name in abl["order"]:
            info = abl["subsets"][name]
            ad = info["aggregate"]["abs_diff"]
            lines.append(
                f"{name:<14}{len(info['rows']):>6d}"
                f"{ad['mean']:>10.2f}{ad['std']:>10.2f}{ad['max']:>10.2f}"
            )
        return "\n".join(lines) + "\n"
