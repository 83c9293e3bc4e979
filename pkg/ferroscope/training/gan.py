"""
Adversarial training of the generator / patch discriminator pair on normal tiles.

Per step, on a drop-last mini-batch x:
- discriminator: BCE(D(x) -> 1) + BCE(D(G(x)) -> 0), gradients from the logit
- generator: lambda_adv * BCE(D(G(x)) -> 1) + lambda_rec * L1(G(x), x)

The two networks own disjoint parameter sets and separate Adam states.
"""

import time
from typing import Sequence, Tuple, Union

import numpy as np

from ferroscope.imaging.grid import UnitImage
from ferroscope.nets.builders import LOGIT_NODE
from ferroscope.nets.inference import stack_tiles
from ferroscope.tensorcore import Adam, Mode, Network, bce_with_logits, l1_loss
from ferroscope.training.classifier import load_snapshot, snapshot
from ferroscope.training.config import TrainConfig, TrainReport
from ferroscope.utils.errors import InvalidArgumentError, NonFiniteError, StateError, TrainingDivergedError
from ferroscope.utils.logger import logger

COLLAPSE_LOSS = 1e-4


def steps_per_epoch(n: int, batch_size: int) -> int:
    return n // batch_size


def _as_batch(generator: Network, tiles: Union[np.ndarray, Sequence[UnitImage]]) -> np.ndarray:
    if isinstance(tiles, np.ndarray):
        if tiles.ndim != 4 or tuple(tiles.shape[1:]) != generator.input_shape:
            raise InvalidArgumentError(f"GAN batch must be (N, {generator.input_shape}), got {tiles.shape}")
        return tiles.astype(np.float32, copy=False)
    return stack_tiles(generator, tiles)


def train_gan(
    generator: Network,
    discriminator: Network,
    normal_tiles: Union[np.ndarray, Sequence[UnitImage]],
    cfg: TrainConfig,
) -> Tuple[Network, Network, TrainReport]:
    """Train the pair in place; returns (generator, discriminator, report)."""
    if generator.input_shape != discriminator.input_shape:
        raise InvalidArgumentError(
            f"Generator input {generator.input_shape} differs from discriminator input {discriminator.input_shape}"
        )
    data = _as_batch(generator, normal_tiles)
    n = data.shape[0]
    if n < cfg.batch_size:
        raise InvalidArgumentError(f"GAN training needs at least batch_size={cfg.batch_size} tiles, got {n}")

    g_opt = Adam(generator.parameters(), cfg.adam)
    d_opt = Adam(discriminator.parameters(), cfg.adam)
    if g_opt.parameter_names & d_opt.parameter_names:
        raise StateError("Generator and discriminator share parameter names")

    report = TrainReport(kind="gan", seed=cfg.seed, epochs=cfg.epochs)
    steps = steps_per_epoch(n, cfg.batch_size)
    last_good = (snapshot(generator), snapshot(discriminator))
    started = time.perf_counter()
    logger.info("GAN training started", tiles=n, steps_per_epoch=steps, epochs=cfg.epochs, batch_size=cfg.batch_size)

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        sums = {"discriminator": 0.0, "generator": 0.0, "adversarial": 0.0, "reconstruction": 0.0}
        d_peak = 0.0
        for step in range(steps):
            x = data[order[step * cfg.batch_size:(step + 1) * cfg.batch_size]]
            try:
                losses = _step(generator, discriminator, g_opt, d_opt, x, cfg)
            except NonFiniteError as e:
                load_snapshot(generator, last_good[0])
                load_snapshot(discriminator, last_good[1])
                report.wall_seconds = time.perf_counter() - started
                logger.error("GAN training diverged", epoch=epoch + 1, step=step + 1, cause=str(e))
                raise TrainingDivergedError(f"GAN diverged at epoch {epoch + 1}, step {step + 1}: {e}", report) from e
            for key, value in losses.items():
                sums[key] += value
            d_peak = max(d_peak, losses["discriminator"])

        means = {key: value / steps for key, value in sums.items()}
        report.record(means)
        last_good = (snapshot(generator), snapshot(discriminator))
        if d_peak < COLLAPSE_LOSS:
            message = f"epoch {epoch + 1}: discriminator loss collapsed below {COLLAPSE_LOSS} for the whole epoch"
            report.warnings.append(message)
            logger.warning("Discriminator loss collapsed", epoch=epoch + 1, peak_loss=d_peak)
        logger.info("GAN epoch finished", epoch=epoch + 1, **{k: round(v, 5) for k, v in means.items()})

    report.metrics = {
        "steps_per_epoch": steps,
        "total_steps": steps * cfg.epochs,
        "final_reconstruction": report.losses["reconstruction"][-1] if cfg.epochs else None,
    }
    report.wall_seconds = time.perf_counter() - started
    logger.info("GAN training finished", seconds=round(report.wall_seconds, 2), warnings=len(report.warnings))
    return generator, discriminator, report


def _step(generator: Network, discriminator: Network, g_opt: Adam, d_opt: Adam, x: np.ndarray, cfg: TrainConfig) -> dict:
    g_opt.zero_grad()
    fake = generator.run(x, Mode.TRAIN)

    d_opt.zero_grad()
    real_logit = discriminator.forward(x, Mode.TRAIN)[LOGIT_NODE]
    d_real, grad = bce_with_logits(real_logit, 1.0)
    discriminator.backward(grad, start=LOGIT_NODE)
    fake_logit = discriminator.forward(fake, Mode.TRAIN)[LOGIT_NODE]
    d_fake, grad = bce_with_logits(fake_logit, 0.0)
    discriminator.backward(grad, start=LOGIT_NODE)
    d_loss = d_real + d_fake
    if not np.isfinite(d_loss):
        raise NonFiniteError("Non-finite discriminator loss", name="discriminator")
    d_opt.step()

    fooled_logit = discriminator.forward(fake, Mode.TRAIN)[LOGIT_NODE]
    adversarial, grad = bce_with_logits(fooled_logit, 1.0)
    reconstruction, rec_grad = l1_loss(fake, x)
    g_loss = cfg.lambda_adv * adversarial + cfg.lambda_rec * reconstruction
    if not np.isfinite(g_loss):
        raise NonFiniteError("Non-finite generator loss", name="generator")

    fake_grad = cfg.lambda_rec * rec_grad
    if cfg.lambda_adv:
        fake_grad = fake_grad + discriminator.backward(cfg.lambda_adv * grad, start=LOGIT_NODE)
    # adversarial backprop must not leak into the discriminator's update
    d_opt.zero_grad()
    generator.backward(fake_grad.astype(fake.dtype))
    g_opt.step()

    generator.advance()
    discriminator.advance()
    return {
        "discriminator": d_loss,
        "generator": g_loss,
        "adversarial": adversarial,
        "reconstruction": reconstruction,
    }
