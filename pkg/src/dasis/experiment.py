"""Config-driven experiment driver: optimization, sweeps, and artifacts.

An experiment config is a JSON document with optional blocks; every field
has a default matching the reference setup (28 GHz, two layers, Rician
kappa 15, the three-tap multi-path profile, and the seven benchmark
pipelines).  Complex taps are written as {"modulus": m, "phase_rad": p}
pairs.

Seeding: the top-level "seed" is the root.  The channel draw uses
channel.seed if given, else (root, 1); the optimizer uses optimizer.seed
if given, else (root, 2); each sweep derives its stream from
(root, 3, crc32(curve label), point, wave), so a persisted surface
re-swept under the same root seed reproduces its CSV byte for byte.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from .channel import TemporalTaps, build_vector_channel, default_temporal_taps, rician_spatial_channel
from .equalizers import UnstableChannelError, ensure_stable_inverse
from .geometry import SisGeometry, make_geometry
from .montecarlo import StopRule, snr_sweep, write_curve_csv
from .optimizer import OptimizerHyperparams, OptimizationResult, hybrid_optimize
from .pipelines import DaSisPipeline, DigitalPipeline
from .surface import SisConfig, effective_response, load_config, save_config

DEFAULT_PIPELINES = (
    "da-sis:4",
    "da-sis:81",
    "zf-iir",
    "fir:4",
    "fir:20",
    "zf-iir-noiseless",
    "no-eq",
)

# auto noise-variance policy: fraction of the pure-beamforming peak power
# used as the design noise level of the main optimization run
AUTO_GAIN_FRACTION = 0.125
PILOT_NOISE_VARIANCE = 1e6
PILOT_MASK_DRAWS = 8
PILOT_MAX_ITERS = 300


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    frequency_hz: float = 28e9
    num_layers: int = 2
    elements_per_layer: int = 81
    tx_position: tuple = (0.0, 0.0, 0.0)
    rx_position: tuple = (0.0, 100.0, -15.0)
    element_spacing: float | None = None
    layer_spacing: float | None = None
    element_area: float | None = None

    kappa: float = 15.0
    taps: TemporalTaps = field(default_factory=default_temporal_taps)
    channel_seed: object = None

    hyper: OptimizerHyperparams = field(default_factory=OptimizerHyperparams)
    optimizer_seed: object = None
    noise_variance: object = "auto"

    snr_grid_db: tuple = tuple(float(s) for s in range(40, 85, 5))
    snr_def: str = "received"
    stop: StopRule = field(default_factory=StopRule)
    block_len: int = 128

    pipelines: tuple = DEFAULT_PIPELINES
    out_dir: str = "results"
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        cfg = cls()
        geo = doc.get("geometry", {})
        cfg.frequency_hz = float(geo.get("frequency_hz", cfg.frequency_hz))
        cfg.num_layers = int(geo.get("num_layers", cfg.num_layers))
        cfg.elements_per_layer = int(geo.get("elements_per_layer", cfg.elements_per_layer))
        cfg.tx_position = tuple(geo.get("tx_position", cfg.tx_position))
        cfg.rx_position = tuple(geo.get("rx_position", cfg.rx_position))
        for key in ("element_spacing", "layer_spacing", "element_area"):
            if geo.get(key) is not None:
                setattr(cfg, key, float(geo[key]))

        ch = doc.get("channel", {})
        cfg.kappa = float(ch.get("kappa", cfg.kappa))
        if "taps" in ch:
            cfg.taps = TemporalTaps(
                np.array(
                    [
                        t["modulus"] * np.exp(1j * t["phase_rad"])
                        for t in ch["taps"]
                    ],
                    dtype=complex,
                )
            )
        if "seed" in ch:
            cfg.channel_seed = ch["seed"]

        opt = doc.get("optimizer", {})
        cfg.hyper = OptimizerHyperparams(
            mask_draws=int(opt.get("mask_draws", 50)),
            max_iters=int(opt.get("max_iters", 500)),
            learning_rate=float(opt.get("learning_rate", 0.1)),
            lr_decay=float(opt.get("lr_decay", 0.5)),
            tolerance=float(opt.get("tolerance", 1e-6)),
        )
        cfg.optimizer_seed = opt.get("seed")
        cfg.noise_variance = opt.get("noise_variance", "auto")

        sweep = doc.get("sweep", {})
        cfg.snr_grid_db = tuple(float(s) for s in sweep.get("snr_grid_db", cfg.snr_grid_db))
        cfg.snr_def = sweep.get("snr_def", cfg.snr_def)
        stop = sweep.get("stop_rule", {})
        cfg.stop = StopRule(
            min_errors=int(stop.get("min_errors", 100)),
            max_bits=int(stop.get("max_bits", 10_000_000)),
        )
        cfg.block_len = int(sweep.get("block_len", cfg.block_len))

        cfg.pipelines = tuple(doc.get("pipelines", cfg.pipelines))
        out = doc.get("output", {})
        cfg.out_dir = out.get("dir", cfg.out_dir)
        cfg.seed = int(doc.get("seed", cfg.seed))
        return cfg

    # derived seeds -----------------------------------------------------
    def channel_seed_for(self, elements: int) -> list:
        base = self.channel_seed if self.channel_seed is not None else [self.seed, 1]
        return _as_seed_list(base) + [elements]

    def optimizer_seed_effective(self) -> list:
        base = self.optimizer_seed if self.optimizer_seed is not None else [self.seed, 2]
        return _as_seed_list(base)

    def sweep_seed_for(self, label: str) -> list:
        return [self.seed, 3, zlib.crc32(label.encode())]

    def geometry_for(self, elements: int) -> SisGeometry:
        return make_geometry(
            frequency_hz=self.frequency_hz,
            num_layers=self.num_layers,
            elements_per_layer=elements,
            tx_position=self.tx_position,
            rx_position=self.rx_position,
            element_spacing=self.element_spacing,
            layer_spacing=self.layer_spacing,
            element_area=self.element_area,
        )

    def channel_for(self, geometry: SisGeometry):
        spatial = rician_spatial_channel(
            geometry, self.kappa, self.channel_seed_for(geometry.elements_per_layer)
        )
        return build_vector_channel(spatial, self.taps, kappa=self.kappa)


def _as_seed_list(seed) -> list:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def load_experiment_config(path: str) -> ExperimentConfig:
    """Parse a config file; JSON errors carry the offending line number."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top-level value must be an object")
    try:
        return ExperimentConfig.from_dict(doc)
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"{path}: {err}") from err


def parse_pipeline_descriptor(descriptor: str) -> dict:
    """Split a pipeline descriptor string into its kind and parameters."""
    if descriptor.startswith("da-sis:"):
        n = int(descriptor.split(":", 1)[1])
        return {"kind": "da-sis", "elements": n}
    if descriptor.startswith("fir:"):
        return {"kind": "fir", "taps": int(descriptor.split(":", 1)[1])}
    if descriptor in ("zf-iir", "zf-iir-noiseless", "no-eq", "awgn"):
        return {"kind": descriptor}
    raise ConfigError(f"unknown pipeline descriptor {descriptor!r}")


def validate_config(config: ExperimentConfig) -> list[dict]:
    """Static invariant checks; returns a machine-readable pass/fail list."""
    report = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        report.append({"check": name, "ok": bool(ok), "detail": detail})

    check("frequency_positive", config.frequency_hz > 0, f"{config.frequency_hz}")
    check("num_layers_positive", config.num_layers >= 1, f"{config.num_layers}")

    def is_square(n: int) -> bool:
        return n >= 1 and math.isqrt(n) ** 2 == n

    check(
        "elements_square",
        is_square(config.elements_per_layer),
        f"N={config.elements_per_layer}",
    )
    check("kappa_non_negative", config.kappa >= 0, f"{config.kappa}")

    grid = config.snr_grid_db
    ascending = bool(grid) and all(b > a for a, b in zip(grid, grid[1:]))
    check("snr_grid_ascending", ascending, f"{len(grid)} points")
    check("snr_def_known", config.snr_def in ("received", "transmit"), config.snr_def)
    check(
        "stop_rule_positive",
        config.stop.min_errors >= 1 and config.stop.max_bits >= config.block_len,
        f"{config.stop}",
    )

    needs_stable = False
    for descriptor in config.pipelines:
        try:
            parsed = parse_pipeline_descriptor(descriptor)
        except ConfigError as err:
            check("pipeline_known", False, str(err))
            continue
        check("pipeline_known", True, descriptor)
        if parsed["kind"] == "da-sis":
            check("pipeline_elements_square", is_square(parsed["elements"]), descriptor)
        if parsed["kind"] in ("zf-iir", "zf-iir-noiseless", "fir"):
            needs_stable = True
        if parsed["kind"] == "fir":
            check("fir_taps_positive", parsed["taps"] >= 1, descriptor)

    if needs_stable:
        try:
            ensure_stable_inverse(config.taps)
            check("channel_inverse_stable", True)
        except (UnstableChannelError, ValueError) as err:
            check("channel_inverse_stable", False, str(err))
    return report


def auto_noise_variance(geometry, channel, hyper: OptimizerHyperparams) -> float:
    """Design noise level for the main optimization run.

    A short pure-beamforming pilot (huge noise variance makes the loss
    gain-dominated) estimates the achievable peak-tap power; the main run
    then optimizes at a fraction of it so the loss trades residual
    interference against beamforming gain near the intended operating
    point.
    """
    pilot_hyper = OptimizerHyperparams(
        mask_draws=min(PILOT_MASK_DRAWS, hyper.mask_draws),
        max_iters=min(PILOT_MAX_ITERS, hyper.max_iters),
        learning_rate=hyper.learning_rate,
        lr_decay=hyper.lr_decay,
        tolerance=hyper.tolerance,
        seed=hyper.seed,
    )
    pilot = hybrid_optimize(geometry, channel, PILOT_NOISE_VARIANCE, pilot_hyper)
    g = effective_response(pilot.best_config, geometry, channel)
    return AUTO_GAIN_FRACTION * float(np.max(np.abs(g)) ** 2)


def optimize_surface(
    config: ExperimentConfig, elements: int, threads: int = 1
) -> tuple[OptimizationResult, SisGeometry, object, float]:
    """Hybrid-optimize one surface size; returns (result, geometry, channel, sigma2)."""
    geometry = config.geometry_for(elements)
    channel = config.channel_for(geometry)
    hyper = OptimizerHyperparams(
        mask_draws=config.hyper.mask_draws,
        max_iters=config.hyper.max_iters,
        learning_rate=config.hyper.learning_rate,
        lr_decay=config.hyper.lr_decay,
        tolerance=config.hyper.tolerance,
        seed=config.optimizer_seed_effective(),
    )
    if config.noise_variance == "auto":
        sigma2 = auto_noise_variance(geometry, channel, hyper)
    else:
        sigma2 = float(config.noise_variance)
    result = hybrid_optimize(geometry, channel, sigma2, hyper, threads=threads)
    return result, geometry, channel, sigma2


def _safe_name(label: str) -> str:
    return label.replace(":", "-")


def build_digital_pipeline(config: ExperimentConfig, descriptor: str) -> DigitalPipeline:
    parsed = parse_pipeline_descriptor(descriptor)
    kind = parsed["kind"]
    if kind == "no-eq":
        return DigitalPipeline(config.taps, "none", label=descriptor)
    if kind == "awgn":
        return DigitalPipeline(np.ones(1, dtype=complex), "none", label=descriptor)
    if kind == "fir":
        return DigitalPipeline(config.taps, ("fir", parsed["taps"]), label=descriptor)
    if kind in ("zf-iir", "zf-iir-noiseless"):
        return DigitalPipeline(config.taps, kind, label=descriptor)
    raise ConfigError(f"{descriptor!r} is not a digital pipeline")


PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Render the BER curves produced by this experiment (requires matplotlib)."""
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
CURVES = {curves!r}

fig, ax = plt.subplots(figsize=(7, 5))
for fname in CURVES:
    snrs, bers, label = [], [], fname
    with open(HERE / fname) as fh:
        for row in csv.DictReader(fh):
            label = row["label"]
            snrs.append(float(row["snr_db"]))
            bers.append(max(float(row["ber"]), 1e-12))
    ax.semilogy(snrs, bers, marker="o", label=label)
ax.set_xlabel("{snr_def} SNR (dB)")
ax.set_ylabel("BER")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "ber_curves.png", dpi=200)
print(HERE / "ber_curves.png")
'''


def write_plot_script(path: str, curve_files: list[str], snr_def: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(PLOT_TEMPLATE.format(curves=curve_files, snr_def=snr_def))
    os.replace(tmp, path)


def run_experiment(
    config: ExperimentConfig,
    threads: int = 1,
    only: str = "all",
    surface_path: str | None = None,
) -> list[str]:
    """Execute the configured pipelines and write all artifacts.

    only: "all" (optimize + sweep + plot script), "optimize" (surfaces
    only), "baseline" (digital pipelines only), or "sweep" (re-sweep a
    persisted surface given via surface_path).  Returns the list of
    written artifact paths.
    """
    failures = [r for r in validate_config(config) if not r["ok"]]
    if failures:
        msgs = "; ".join(f"{r['check']}: {r['detail']}" for r in failures)
        raise ConfigError(f"invalid configuration: {msgs}")

    os.makedirs(config.out_dir, exist_ok=True)
    artifacts: list[str] = []
    curve_files: list[str] = []

    def sweep_and_write(pipeline) -> None:
        curve = snr_sweep(
            pipeline,
            config.snr_grid_db,
            stop=config.stop,
            seed=config.sweep_seed_for(pipeline.label),
            snr_def=config.snr_def,
            threads=threads,
            block_len=config.block_len,
        )
        path = os.path.join(config.out_dir, f"{_safe_name(pipeline.label)}.csv")
        write_curve_csv(curve, path)
        artifacts.append(path)
        curve_files.append(os.path.basename(path))

    if only == "sweep":
        if surface_path is None:
            raise ConfigError("sweep mode requires a persisted surface path")
        surface = load_config(surface_path)
        geometry = config.geometry_for(surface.elements_per_layer)
        channel = config.channel_for(geometry)
        label = f"da-sis:{surface.elements_per_layer}"
        sweep_and_write(DaSisPipeline(surface, geometry, channel, label=label))
        return artifacts

    for descriptor in config.pipelines:
        parsed = parse_pipeline_descriptor(descriptor)
        if parsed["kind"] == "da-sis":
            if only == "baseline":
                continue
            result, geometry, channel, sigma2 = optimize_surface(
                config, parsed["elements"], threads=threads
            )
            surface_file = os.path.join(
                config.out_dir, f"surface-{_safe_name(descriptor)}.json"
            )
            save_config(
                result.best_config,
                surface_file,
                metadata={
                    "label": descriptor,
                    "loss": result.best_loss,
                    "loss_trace": result.loss_trace,
                    "draws": result.draws,
                    "seed": config.optimizer_seed_effective(),
                    "noise_variance": sigma2,
                    "hyperparams": {
                        "mask_draws": config.hyper.mask_draws,
                        "max_iters": config.hyper.max_iters,
                        "learning_rate": config.hyper.learning_rate,
                        "lr_decay": config.hyper.lr_decay,
                        "tolerance": config.hyper.tolerance,
                    },
                },
            )
            artifacts.append(surface_file)
            if only != "optimize":
                sweep_and_write(
                    DaSisPipeline(result.best_config, geometry, channel, label=descriptor)
                )
        else:
            if only == "optimize":
                continue
            sweep_and_write(build_digital_pipeline(config, descriptor))

    if only == "all" and curve_files:
        plot_path = os.path.join(config.out_dir, "plot_ber.py")
        write_plot_script(plot_path, curve_files, config.snr_def)
        artifacts.append(plot_path)
    return artifacts
