"""Hybrid surface configuration search: random delay bits, gradient-descended phases.

The continuous objective is the inverse post-detection SINR of the
end-to-end effective response g at the BPSK slicer.  With t* the dominant
tap, only the component of each residual tap that is co-phased with
g[t*] lands on the decision axis, so the interference entering the
surrogate is the real projection a_t = Re(g[t] conj(g[t*])) / |g[t*]|:

    loss = (sum_{t != t*} a_t^2 + noise_variance) / |g[t*]|^2

BPSK BER is approximately Q(sqrt(2 / loss)), strictly increasing in the
loss, so descending it descends the BER surrogate; residual taps pushed
into quadrature are harmless to the slicer and are not penalized.  For a
co-phased (e.g. real) response this reduces to the plain inverse SINR
(sum |g[t]|^2 + noise) / |g[t*]|^2.

The phase gradient is computed analytically by one forward and one
adjoint pass through the layer cascade; t* is held fixed during
differentiation (piecewise-smooth treatment) and re-evaluated each
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, convolve_channel
from .geometry import SisGeometry
from .montecarlo import seed_list
from .surface import SisConfig, SurfaceStack, build_stack, pad_input

TIE_MARGIN = 1e-12


class TiedDominantTapError(ValueError):
    """Two effective-response taps tie for the maximum within tolerance."""


@dataclass(frozen=True)
class OptimizerHyperparams:
    mask_draws: int = 50
    max_iters: int = 500
    learning_rate: float = 0.1
    lr_decay: float = 0.5
    tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.mask_draws < 1 or self.max_iters < 1:
            raise ValueError("mask_draws and max_iters must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")


@dataclass
class OptimizationResult:
    best_config: SisConfig
    best_loss: float
    loss_trace: list[float]
    draws: int

    def to_dict(self) -> dict:
        return {
            "best_loss": self.best_loss,
            "loss_trace": list(self.loss_trace),
            "draws": self.draws,
            "config": self.best_config.to_dict(),
        }


def _dominant_tap(g: np.ndarray, strict: bool = False) -> int:
    mags = np.abs(g)
    if not np.any(mags > 0):
        raise ValueError("all-zero effective response")
    t_star = int(np.argmax(mags))
    if strict and mags.size > 1:
        runner_up = np.max(np.delete(mags, t_star))
        if mags[t_star] - runner_up <= TIE_MARGIN:
            raise TiedDominantTapError(
                f"dominant tap magnitude ties runner-up within {TIE_MARGIN}"
            )
    return t_star


def loss_from_response(g: np.ndarray, noise_variance: float) -> float:
    """Inverse post-detection SINR of an effective response at the BPSK slicer."""
    g = np.asarray(g)
    t_star = _dominant_tap(g)
    power = np.abs(g[t_star]) ** 2
    axis = np.real(g * np.conj(g[t_star])) / np.sqrt(power)
    isi = float(np.sum(axis**2) - power)
    return (isi + noise_variance) / power


def _loss_cotangent(g: np.ndarray, t_star: int, noise_variance: float) -> np.ndarray:
    """Wirtinger derivative dL/dg of loss_from_response with t* held fixed."""
    gs = g[t_star]
    power = np.abs(gs) ** 2
    amp = np.sqrt(power)
    axis = np.real(g * np.conj(gs)) / amp
    axis[t_star] = 0.0
    isi = float(np.sum(axis**2))
    cot = axis * np.conj(gs) / power**1.5
    cot[t_star] = (
        np.sum(axis * np.conj(g)) / power**1.5
        - (2.0 * isi + noise_variance) * np.conj(gs) / power**2
    )
    return cot


def _forward_states(config: SisConfig, stack: SurfaceStack, channel: ChannelRealization):
    """Forward cascade on the single-symbol input, keeping per-layer states.

    Returns (g, delayed, units) where delayed[i] is the delayed block and
    units[i] the per-element phase factors of layer i+1 (innermost first).
    """
    num_layers = config.num_layers
    block = pad_input(convolve_channel(channel, np.ones(1, dtype=complex)), num_layers)
    delayed: list[np.ndarray | None] = [None] * num_layers
    units: list[np.ndarray] = [np.exp(1j * p) for p in config.phases]
    for layer in range(num_layers, 1, -1):
        i = layer - 1
        delayed[i] = _shift_rows(block, config.delay_bits[i])
        block = stack.inter_layer[layer - 2] @ (units[i][:, None] * delayed[i])
    delayed[0] = _shift_rows(block, config.delay_bits[0])
    g = stack.combining @ (units[0][:, None] * delayed[0])
    return g, delayed, units


def _shift_rows(block: np.ndarray, bits: np.ndarray) -> np.ndarray:
    ones = np.asarray(bits) == 1
    out = block.copy()
    out[ones, 1:] = block[ones, :-1]
    out[ones, 0] = 0
    return out


def _unshift_rows(block: np.ndarray, bits: np.ndarray) -> np.ndarray:
    # adjoint of _shift_rows: shift bit-1 rows left with a trailing zero
    ones = np.asarray(bits) == 1
    out = block.copy()
    out[ones, :-1] = block[ones, 1:]
    out[ones, -1] = 0
    return out


def surrogate_loss(
    config: SisConfig,
    geometry: SisGeometry | SurfaceStack,
    channel: ChannelRealization,
    noise_variance: float,
) -> float:
    """Inverse post-detection SINR of the configured cascade."""
    stack = build_stack(geometry)
    g, _, _ = _forward_states(config, stack, channel)
    return loss_from_response(g, noise_variance)


def phase_gradient(
    config: SisConfig,
    geometry: SisGeometry | SurfaceStack,
    channel: ChannelRealization,
    noise_variance: float,
) -> np.ndarray:
    """Analytic d(loss)/d(theta) for every phase, layers innermost first.

    One adjoint pass: with Wirtinger cotangent G_t = dL/dg_t, each
    C-linear stage backpropagates by its transpose, and for u = e^{j
    theta} the real gradient is -2 Im(U * u) with U the cotangent of u.
    Raises TiedDominantTapError when the dominant tap is not unique.
    """
    stack = build_stack(geometry)
    g, delayed, units = _forward_states(config, stack, channel)
    t_star = _dominant_tap(g, strict=True)
    cot_g = _loss_cotangent(g, t_star, noise_variance)

    num_layers = config.num_layers
    grads: list[np.ndarray | None] = [None] * num_layers

    # innermost layer: g = combining @ (u1 * delayed1)
    cot_y = stack.combining[:, None] * cot_g[None, :]
    cot_u = np.sum(cot_y * delayed[0], axis=1)
    grads[0] = -2.0 * np.imag(cot_u * units[0])
    cot_block = _unshift_rows(units[0][:, None] * cot_y, config.delay_bits[0])

    for layer in range(2, num_layers + 1):
        i = layer - 1
        cot_y = stack.inter_layer[layer - 2].T @ cot_block
        cot_u = np.sum(cot_y * delayed[i], axis=1)
        grads[i] = -2.0 * np.imag(cot_u * units[i])
        cot_block = _unshift_rows(units[i][:, None] * cot_y, config.delay_bits[i])

    return np.concatenate(grads)


def finite_difference_gradient(
    config: SisConfig,
    geometry: SisGeometry | SurfaceStack,
    channel: ChannelRealization,
    noise_variance: float,
    step: float = 1e-6,
) -> np.ndarray:
    """Central-difference gradient of the surrogate loss (oracle/fallback)."""
    stack = build_stack(geometry)
    theta = np.concatenate(config.phases)
    grad = np.empty_like(theta)
    for k in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus[k] += step
        minus[k] -= step
        hi = surrogate_loss(_config_with_phases(config, plus), stack, channel, noise_variance)
        lo = surrogate_loss(_config_with_phases(config, minus), stack, channel, noise_variance)
        grad[k] = (hi - lo) / (2.0 * step)
    return grad


def _config_with_phases(config: SisConfig, theta: np.ndarray) -> SisConfig:
    n = config.elements_per_layer
    phases = [
        np.mod(theta[i * n : (i + 1) * n], 2.0 * np.pi) for i in range(config.num_layers)
    ]
    return SisConfig(phases=phases, delay_bits=[b.copy() for b in config.delay_bits])


def gradient_descent_phases(
    config: SisConfig,
    geometry: SisGeometry | SurfaceStack,
    channel: ChannelRealization,
    noise_variance: float,
    hyper: OptimizerHyperparams,
) -> tuple[SisConfig, float]:
    """Plain gradient descent on the phases with the delay bits held fixed.

    The learning rate decays by lr_decay after 10 iterations without
    improvement; iteration stops at max_iters or when the best loss
    improves by less than `tolerance` (relative) over 20 iterations.
    Returns the best iterate seen.
    """
    stack = build_stack(geometry)
    current = config.copy()
    best = current
    best_loss = surrogate_loss(current, stack, channel, noise_variance)
    history = [best_loss]
    lr = hyper.learning_rate
    stale = 0

    for _ in range(hyper.max_iters):
        try:
            grad = phase_gradient(current, stack, channel, noise_variance)
        except TiedDominantTapError:
            grad = finite_difference_gradient(current, stack, channel, noise_variance)
        theta = np.concatenate(current.phases) - lr * grad
        current = _config_with_phases(current, theta)
        loss = surrogate_loss(current, stack, channel, noise_variance)
        if loss < best_loss:
            best, best_loss, stale = current, loss, 0
        else:
            stale += 1
            if stale >= 10:
                lr *= hyper.lr_decay
                stale = 0
        history.append(best_loss)
        if len(history) > 20:
            prev = history[-21]
            if prev - best_loss < hyper.tolerance * max(prev, 1e-300):
                break
    return best, best_loss


def random_delay_draw(num_layers: int, elements_per_layer: int, seed) -> list[np.ndarray]:
    """Fair-coin delay bits per element per layer."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return [
        rng.integers(0, 2, size=elements_per_layer, dtype=np.int8)
        for _ in range(num_layers)
    ]


def random_phases(num_layers: int, elements_per_layer: int, rng) -> list[np.ndarray]:
    """Phases drawn uniformly and independently from [0, 2 pi)."""
    return [rng.uniform(0.0, 2.0 * np.pi, size=elements_per_layer) for _ in range(num_layers)]


def hybrid_optimize(
    geometry: SisGeometry | SurfaceStack,
    channel: ChannelRealization,
    noise_variance: float,
    hyper: OptimizerHyperparams,
    threads: int = 1,
) -> OptimizationResult:
    """Random search over delay bits wrapped around phase descent.

    Each of the mask_draws rounds draws fresh delay bits and uniform
    random phases from a per-round seed, descends the phases, and records
    the final loss; the best (config, loss) pair over all rounds wins.
    Rounds are independent, so the result does not depend on thread count.
    """
    stack = build_stack(geometry)
    num_layers = stack.num_layers
    n = stack.elements_per_layer
    base = seed_list(hyper.seed)

    def run_draw(r: int) -> tuple[SisConfig, float]:
        rng = np.random.default_rng(base + [r])
        bits = random_delay_draw(num_layers, n, rng)
        phases = random_phases(num_layers, n, rng)
        start = SisConfig(phases=phases, delay_bits=bits)
        return gradient_descent_phases(start, stack, channel, noise_variance, hyper)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_draw, range(hyper.mask_draws)))
    else:
        outcomes = [run_draw(r) for r in range(hyper.mask_draws)]

    trace = [loss for _, loss in outcomes]
    best_idx = int(np.argmin(trace))
    return OptimizationResult(
        best_config=outcomes[best_idx][0],
        best_loss=trace[best_idx],
        loss_trace=trace,
        draws=hyper.mask_draws,
    )
