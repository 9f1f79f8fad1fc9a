"""BPSK modulation/detection and seeded Monte Carlo BER estimation.

Bits are accumulated in fixed-size waves of blocks so that results are
bit-identical for a given root seed regardless of thread count or stop
time: every wave owns an RNG derived deterministically from
(seed, sweep point, wave index).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

BLOCK_LEN = 128          # symbols per block (one channel-noise block)
BLOCKS_PER_WAVE = 64     # blocks drawn per RNG stream / stop-rule check

CSV_HEADER = "label,snr_db,ber,bits,errors,ci"


def seed_list(seed) -> list[int]:
    """Normalize a seed (int or sequence of ints) to a list of ints."""
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


@dataclass(frozen=True)
class StopRule:
    """Stop after min_errors bit errors or max_bits simulated bits."""

    min_errors: int = 100
    max_bits: int = 10_000_000

    def __post_init__(self):
        if self.min_errors < 1 or self.max_bits < 1:
            raise ValueError("stop rule fields must be positive")


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    bits_simulated: int
    bit_errors: int
    ci_half_width: float

    @classmethod
    def from_counts(cls, snr_db: float, bit_errors: int, bits_simulated: int) -> "BerPoint":
        if bits_simulated <= 0:
            raise ValueError("bits_simulated must be positive")
        if bit_errors > bits_simulated:
            raise ValueError("more errors than bits")
        p = bit_errors / bits_simulated
        ci = 1.96 * np.sqrt(p * (1.0 - p) / bits_simulated)
        return cls(
            snr_db=float(snr_db),
            ber=p,
            bits_simulated=bits_simulated,
            bit_errors=bit_errors,
            ci_half_width=float(ci),
        )


@dataclass(frozen=True)
class BerCurve:
    label: str
    points: tuple[BerPoint, ...]

    def __post_init__(self):
        snrs = [p.snr_db for p in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise ValueError("points must be strictly increasing in snr_db")

    def ber_at(self, snr_db: float) -> float:
        for p in self.points:
            if p.snr_db == snr_db:
                return p.ber
        raise KeyError(f"no point at {snr_db} dB")


def bpsk_modulate(bits) -> np.ndarray:
    """Map bit 0 -> +1, bit 1 -> -1."""
    bits = np.asarray(bits)
    return (1.0 - 2.0 * bits).astype(complex)


def bpsk_detect(
    series: np.ndarray, reference_gain: complex, timing_offset: int, num_bits: int
) -> np.ndarray:
    """Coherent BPSK slicing against a known gain and symbol timing.

    Decides bit 0 iff Re(conj(reference_gain) * series[k + timing_offset]) >= 0.
    Accepts a (..., T) array and returns (..., num_bits) uint8 bits.
    """
    if reference_gain == 0:
        raise ValueError("reference gain must be nonzero")
    series = np.asarray(series)
    if timing_offset < 0 or timing_offset + num_bits > series.shape[-1]:
        raise ValueError("detection window out of range")
    window = series[..., timing_offset : timing_offset + num_bits]
    metric = np.real(np.conj(reference_gain) * window)
    return (metric < 0).astype(np.uint8)


def detection_parameters(reference_response: np.ndarray) -> tuple[int, complex]:
    """Timing offset and gain from the dominant tap of an impulse response.

    Ties in |g| resolve to the smallest index.
    """
    g = np.asarray(reference_response)
    if g.size == 0 or not np.any(g != 0):
        raise ValueError("all-zero reference response")
    t_star = int(np.argmax(np.abs(g)))
    return t_star, complex(g[t_star])


def noise_variance_for_snr(
    snr_db: float, antenna_response: np.ndarray, snr_def: str = "received"
) -> float:
    """Noise variance realizing a target SNR.

    received: SNR = (steady-state noise-free signal power at the antenna,
    i.e. the energy of the antenna impulse response under unit-power
    symbols) / variance.  transmit: SNR = (unit symbol power) / variance,
    all channel and surface gains excluded.
    """
    snr_linear = 10.0 ** (snr_db / 10.0)
    if snr_def == "received":
        power = float(np.sum(np.abs(antenna_response) ** 2))
        if power == 0:
            raise ValueError("antenna response has zero power")
        return power / snr_linear
    if snr_def == "transmit":
        return 1.0 / snr_linear
    raise ValueError(f"unknown snr definition {snr_def!r}")


def estimate_ber(
    pipeline,
    snr_db: float,
    stop: StopRule = StopRule(),
    seed=0,
    snr_def: str = "received",
    block_len: int = BLOCK_LEN,
    blocks_per_wave: int = BLOCKS_PER_WAVE,
) -> BerPoint:
    """Monte Carlo BER of one pipeline at one SNR.

    Draws waves of independent bit blocks, pushes them through the
    pipeline at the noise variance implied by snr_def, slices with the
    timing/gain of the pipeline's dominant effective-response tap, and
    accumulates errors until the stop rule fires (checked per wave).
    """
    if stop.max_bits < block_len:
        raise ValueError("max_bits is smaller than a single block")
    t_star, gain = detection_parameters(pipeline.reference_response())
    noise_var = noise_variance_for_snr(snr_db, pipeline.antenna_response(), snr_def)
    base = seed_list(seed)

    errors = 0
    bits_done = 0
    wave = 0
    blocks_per_wave = max(1, min(blocks_per_wave, stop.max_bits // block_len))
    wave_bits = block_len * blocks_per_wave
    while errors < stop.min_errors and bits_done + wave_bits <= stop.max_bits:
        rng = np.random.default_rng(base + [wave])
        bits = rng.integers(0, 2, size=(blocks_per_wave, block_len), dtype=np.uint8)
        symbols = bpsk_modulate(bits)
        series = pipeline.transmit(symbols, noise_var, rng)
        decided = bpsk_detect(series, gain, t_star, block_len)
        errors += int(np.count_nonzero(decided != bits))
        bits_done += wave_bits
        wave += 1
    return BerPoint.from_counts(snr_db, errors, bits_done)


def snr_sweep(
    pipeline,
    snr_grid_db,
    stop: StopRule = StopRule(),
    seed=0,
    snr_def: str = "received",
    threads: int = 1,
    block_len: int = BLOCK_LEN,
) -> BerCurve:
    """One estimate_ber per grid point, assembled into a curve.

    Each point owns a seed derived from (seed, point index), so the curve
    is independent of evaluation order and thread count.
    """
    grid = [float(s) for s in snr_grid_db]
    if not grid:
        raise ValueError("empty SNR grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("SNR grid must be strictly ascending")
    base = seed_list(seed)

    def run_point(idx: int) -> BerPoint:
        return estimate_ber(
            pipeline,
            grid[idx],
            stop=stop,
            seed=base + [idx],
            snr_def=snr_def,
            block_len=block_len,
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(run_point, range(len(grid))))
    else:
        points = [run_point(i) for i in range(len(grid))]
    return BerCurve(label=pipeline.label, points=tuple(points))


def curve_to_csv(curve: BerCurve) -> str:
    lines = [CSV_HEADER]
    for p in curve.points:
        lines.append(
            f"{curve.label},{p.snr_db!r},{p.ber!r},{p.bits_simulated},"
            f"{p.bit_errors},{p.ci_half_width!r}"
        )
    return "\n".join(lines) + "\n"


def write_curve_csv(curve: BerCurve, path: str) -> None:
    """Write a curve atomically (write-then-rename; no partial files)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(curve_to_csv(curve))
    os.replace(tmp, path)


def read_curve_csv(path: str) -> BerCurve:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    label = None
    points = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 6:
            raise ValueError(f"{path}: malformed row {ln!r}")
        label = cells[0]
        points.append(
            BerPoint(
                snr_db=float(cells[1]),
                ber=float(cells[2]),
                bits_simulated=int(cells[3]),
                bit_errors=int(cells[4]),
                ci_half_width=float(cells[5]),
            )
        )
    return BerCurve(label=label or "", points=tuple(points))
