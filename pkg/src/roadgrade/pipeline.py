"""End-to-end orchestration behind the command-line interface.

Every step is a pure function of the run configuration and the input files;
reruns with identical inputs and seed write byte-identical artifacts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from . import data, explain, graphs, grading, metrics, model, synth
from .errors import ConfigError, DataError, DegenerateVarianceError

VARIANT_NAMES = {
    "full": ("hour", "day", "week"),
    "hourly": ("hour",),
    "daily": ("day",),
    "weekly": ("week",),
}


@dataclass(frozen=True)
class RunConfig:
    """One reproducibility artifact per run; flags override file values."""

    network: str = "out/network.csv"
    measurements: str = "out/measurements.csv"
    out_dir: str = "out"
    seed: int = 0
    horizons: tuple[int, ...] = (1, 3, 6, 12, 24)
    # model
    n_grades: int = 5
    hidden1: int = 32
    hidden2: int = 32
    heads: int = 3
    window_hours: int = 24
    window_days: int = 7
    window_weeks: int = 3
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 500
    # graph construction
    alpha_speed: float = 1e-2
    alpha_flow: float = 1e-4
    pattern_hours: int = 24
    # grade labeling
    som_learn_rate: float = 0.1
    som_radius: float = 3.0
    som_max_iter: int = 200
    # sample split
    train_size: int = 240
    val_size: int = 80
    test_size: int = 80
    # synthetic generation
    synth_roads: int = 12
    synth_weeks: int = 6

    def __post_init__(self):
        object.__setattr__(self, "horizons",
                           tuple(int(h) for h in self.horizons))
        if not self.horizons or min(self.horizons) < 1:
            raise ConfigError("horizons must be positive")
        for name in ("n_grades", "hidden1", "hidden2", "heads", "epochs",
                     "batch_size", "train_size", "som_max_iter"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def windows(self) -> tuple[int, int, int]:
        return (self.window_hours, self.window_days, self.window_weeks)

    @property
    def split_sizes(self) -> tuple[int, int, int]:
        return (self.train_size, self.val_size, self.test_size)

    def out_path(self, name: str) -> Path:
        return Path(self.out_dir) / name

    def model_config(self, n_roads: int,
                     resolutions=("hour", "day", "week")) -> model.ModelConfig:
        try:
            return model.ModelConfig(
                n_roads=n_roads, n_grades=self.n_grades,
                hidden1=self.hidden1, hidden2=self.hidden2, heads=self.heads,
                window_hours=self.window_hours, window_days=self.window_days,
                window_weeks=self.window_weeks, resolutions=resolutions,
                learning_rate=self.learning_rate,
                batch_size=self.batch_size, epochs=self.epochs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    values: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a key-value mapping")
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- shared loading steps ---------------------------------------------------------


def _require(path: Path | str, role: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing {role}: {path}")
    return path


def load_inputs(cfg: RunConfig):
    net, road_ids = graphs.read_network_csv(
        _require(cfg.network, "network file"))
    series, _ = data.read_measurements_csv(
        _require(cfg.measurements, "measurement file"), road_ids=road_ids)
    return net, series, road_ids


def fit_hours(cfg: RunConfig, series_t: int, horizon: int) -> tuple[int, int]:
    """Hours treated as training knowledge: up to the last training target."""
    tau0 = data.first_anchor(horizon, cfg.windows)
    last_train_tau = tau0 + cfg.train_size - 1
    end = last_train_tau + horizon + 1
    if end > series_t:
        raise DataError(
            f"series of {series_t} h cannot hold {cfg.train_size} training "
            f"samples at horizon {horizon}")
    return 0, end


def _prepared(cfg: RunConfig, horizon: int):
    """Everything the model stages share: graphs, samples, splits."""
    net, series, road_ids = load_inputs(cfg)
    window = fit_hours(cfg, series.t, horizon)
    normalized = data.minmax_normalize(series, window)
    graph_set = graphs.GraphSet.build(
        net, series, window, alpha_speed=cfg.alpha_speed,
        alpha_flow=cfg.alpha_flow, pattern_hours=cfg.pattern_hours)
    grade_values, start = data.read_grades_csv(
        _require(cfg.out_path(grades_name(horizon)), "grade file"),
        road_ids)
    if start != series.start or grade_values.shape[1] != series.t:
        raise DataError("grade file does not cover the measurement series")
    samples = data.enumerate_samples(normalized, grade_values, horizon,
                                     cfg.windows)
    try:
        train_set, val_set, test_set = data.split(samples, cfg.split_sizes)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    return net, series, normalized, road_ids, graph_set, \
        (train_set, val_set, test_set)


# -- artifact names ---------------------------------------------------------------


def grades_name(horizon: int) -> str:
    return f"grades_h{horizon}.csv"


def _variant_suffix(variant: str) -> str:
    return "" if variant == "full" else f"_{variant}"


def checkpoint_name(horizon: int, variant: str = "full") -> str:
    return f"checkpoint_h{horizon}{_variant_suffix(variant)}.json"


def training_log_name(horizon: int, variant: str = "full") -> str:
    return f"training_log_h{horizon}{_variant_suffix(variant)}.json"


def _dump_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)


# -- commands ----------------------------------------------------------------------


def run_synth(cfg: RunConfig) -> list[Path]:
    net, series = synth.generate_synthetic(cfg.synth_roads, cfg.synth_weeks,
                                           cfg.seed)
    ids = synth.road_ids(net.n)
    for target in (cfg.network, cfg.measurements):
        Path(target).parent.mkdir(parents=True, exist_ok=True)
    graphs.write_network_csv(cfg.network, net, ids)
    data.write_measurements_csv(cfg.measurements, series, ids)
    return [Path(cfg.network), Path(cfg.measurements)]


def run_graphs(cfg: RunConfig, horizon: int) -> list[Path]:
    net, series, road_ids = load_inputs(cfg)
    window = fit_hours(cfg, series.t, horizon)
    graph_set = graphs.GraphSet.build(
        net, series, window, alpha_speed=cfg.alpha_speed,
        alpha_flow=cfg.alpha_flow, pattern_hours=cfg.pattern_hours)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for key in graphs.GRAPH_KEYS:
        path = out / f"adjacency_{key}.csv"
        graphs.write_adjacency_csv(path, graph_set.raw(key), road_ids)
        written.append(path)
    conn = graphs.ConnectivityWeights.from_network(net)
    report = {"window_hours": list(window), "channels": {}}
    for channel, name in enumerate(data.CHANNEL_NAMES):
        field_values = series.values[:, window[0]:window[1], channel].mean(
            axis=1)
        try:
            entry = {
                "degenerate": False,
                "global": graphs.global_morans_i(field_values, conn),
                "local": graphs.local_morans_i(field_values, conn).tolist(),
            }
        except DegenerateVarianceError as exc:
            entry = {"degenerate": True, "reason": str(exc),
                     "global": None, "local": None}
        report["channels"][name] = entry
    report_path = out / "moran_report.json"
    _dump_json(report_path, report)
    written.append(report_path)
    return written


def run_label(cfg: RunConfig, horizon: int) -> list[Path]:
    _, series, road_ids = load_inputs(cfg)
    window = fit_hours(cfg, series.t, horizon)
    normalized = data.minmax_normalize(series, window)
    grade_series, _, _ = grading.label_series(
        normalized.values, cfg.n_grades, seed=cfg.seed,
        learn_rate0=cfg.som_learn_rate, radius0=cfg.som_radius,
        max_iter=cfg.som_max_iter)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / grades_name(horizon)
    data.write_grades_csv(path, grade_series.values, series.start, road_ids)
    return [path]


def _train_and_save(cfg: RunConfig, horizon: int, n_roads: int, graph_set,
                    train_set, val_set, variant: str) -> model.ModelState:
    resolutions = VARIANT_NAMES[variant]
    state = model.init_state(cfg.model_config(n_roads, resolutions), cfg.seed)
    log = model.train(state, train_set, val_set, graph_set)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save_checkpoint(out / checkpoint_name(horizon, variant), state)
    _dump_json(out / training_log_name(horizon, variant), {
        "horizon": horizon,
        "variant": variant,
        "epochs": [{"epoch": e.epoch, "train_loss": e.train_loss,
                    "val_accuracy": e.val_accuracy} for e in log],
    })
    return state


def run_train(cfg: RunConfig, horizon: int,
              variant: str = "full") -> list[Path]:
    net, _, _, _, graph_set, (train_set, val_set, _) = _prepared(cfg, horizon)
    _train_and_save(cfg, horizon, net.n, graph_set, train_set, val_set,
                    variant)
    return [cfg.out_path(checkpoint_name(horizon, variant)),
            cfg.out_path(training_log_name(horizon, variant))]


def _load_trained(cfg: RunConfig, horizon: int, n_roads: int,
                  variant: str = "full") -> model.ModelState:
    path = _require(cfg.out_path(checkpoint_name(horizon, variant)),
                    "checkpoint")
    resolutions = VARIANT_NAMES[variant]
    return model.load_checkpoint(path, cfg.model_config(n_roads, resolutions))


def run_predict(cfg: RunConfig, horizon: int) -> list[Path]:
    net, series, _, road_ids, graph_set, (_, _, test_set) = \
        _prepared(cfg, horizon)
    if not test_set:
        raise DataError("test split is empty; nothing to predict")
    state = _load_trained(cfg, horizon, net.n)
    preds, mean_attention = model.predict_many(state, test_set, graph_set)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pred_path = out / f"predictions_h{horizon}.csv"
    target_hours = [s.target_hour for s in test_set]
    data.write_grades_csv(
        pred_path, preds.T,
        series.timestamp(target_hours[0]), road_ids)
    record = explain.AttentionRecord(
        mean_attention, tuple(state.config.combination_labels()), horizon)
    trace_path = out / f"attention_h{horizon}.json"
    explain.write_attention_record(trace_path, record)
    return [pred_path, trace_path]


def run_evaluate(cfg: RunConfig, horizon: int) -> list[Path]:
    net, series, _, _, graph_set, (_, _, test_set) = _prepared(cfg, horizon)
    if not test_set:
        raise DataError("test split is empty; nothing to evaluate")
    state = _load_trained(cfg, horizon, net.n)
    preds, _ = model.predict_many(state, test_set, graph_set)
    truth = np.stack([s.target for s in test_set])
    mae = metrics.grade_mae_series(preds.T, truth.T)
    payload = {
        "horizon": horizon,
        "accuracy": metrics.accuracy(preds, truth),
        "quadratic_weighted_kappa": metrics.quadratic_weighted_kappa(
            preds, truth, cfg.n_grades),
        "mae_series": mae.tolist(),
    }
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / f"metrics_h{horizon}.json"
    _dump_json(metrics_path, payload)
    mae_path = out / f"mae_series_h{horizon}.csv"
    with open(mae_path, "w", newline="") as fh:
        fh.write("timestamp,grade_mae\n")
        for sample, value in zip(test_set, mae):
            stamp = series.timestamp(sample.target_hour).isoformat()
            fh.write(f"{stamp},{value!r}\n")
    return [metrics_path, mae_path]


def run_explain(cfg: RunConfig, horizon: int) -> list[Path]:
    trace_path = _require(cfg.out_path(f"attention_h{horizon}.json"),
                          "attention record")
    record = explain.read_attention_record(trace_path)
    report = explain.build_report(record)
    out = Path(cfg.out_dir)
    json_path = out / f"importance_h{horizon}.json"
    csv_path = out / f"importance_h{horizon}.csv"
    explain.write_report_json(json_path, report)
    explain.write_report_csv(csv_path, report)
    return [json_path, csv_path]


def run_ablate(cfg: RunConfig) -> list[Path]:
    """Train the full model and the single-resolution variants, then compare.

    Self-contained: labels grades and trains everything per horizon, so only
    the network and measurement files are required up front.
    """
    rows = []
    for horizon in cfg.horizons:
        run_label(cfg, horizon)
        net, _, _, _, graph_set, splits = _prepared(cfg, horizon)
        train_set, val_set, test_set = splits
        if not test_set:
            raise DataError("test split is empty; nothing to compare")
        truth = np.stack([s.target for s in test_set])
        for variant in VARIANT_NAMES:
            state = _train_and_save(cfg, horizon, net.n, graph_set,
                                    train_set, val_set, variant)
            preds, _ = model.predict_many(state, test_set, graph_set)
            rows.append({
                "variant": variant,
                "horizon": horizon,
                "accuracy": metrics.accuracy(preds, truth),
                "kappa": metrics.quadratic_weighted_kappa(
                    preds, truth, cfg.n_grades),
            })
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "ablation.json"
    _dump_json(json_path, {"rows": rows})
    csv_path = out / "ablation.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("variant,horizon,accuracy,kappa\n")
        for row in rows:
            fh.write(f"{row['variant']},{row['horizon']},"
                     f"{row['accuracy']!r},{row['kappa']!r}\n")
    return [json_path, csv_path]
