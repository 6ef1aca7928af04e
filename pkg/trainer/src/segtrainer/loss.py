"""Training loss: soft Dice blended with binary cross entropy.

Both terms treat the whole batch as one pixel population, so the value
for a batch equals the value for the same pixels presented as a single
image. Cross entropy clamps probabilities away from 0 and 1 before the
logs; beta weights the Dice term.
"""

import torch

PROB_FLOOR = 1e-7


def soft_dice_loss(prob: torch.Tensor, target: torch.Tensor, smooth: float = 1.0) -> torch.Tensor:
    overlap = (prob * target).sum()
    total = prob.sum() + target.sum()
    return 1.0 - (2.0 * overlap + smooth) / (total + smooth)


def binary_cross_entropy(prob: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    p = prob.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
    return -(target * p.log() + (1.0 - target) * (1.0 - p).log()).mean()


def combined_loss(
    prob: torch.Tensor,
    target: torch.Tensor,
    beta: float = 0.5,
    smooth: float = 1.0,
) -> torch.Tensor:
    if prob.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(prob.shape)} vs {tuple(target.shape)}")
    return beta * soft_dice_loss(prob, target, smooth) + (1.0 - beta) * binary_cross_entropy(
        prob, target
    )
