from collections.abc import Sequence

from prism.numcore import Tensor, mae, mse


def forecast_loss(prediction: Tensor, target: Tensor, l1_weight: float) -> Tensor:
    """
    ``mean((Ŷ−Y)²) + λ1·mean(|Ŷ−Y|)`` over every batch element and horizon step.
    """
    loss = mse(prediction, target)
    if l1_weight:
        loss = loss + mae(prediction, target) * l1_weight
    return loss


def total_loss(forecast: Tensor, diversity: Sequence[Tensor], diversity_weight: float) -> Tensor:
    """
    Forecast loss plus ``λ_div`` times the sum of the per-layer diversity losses.
    """
    if not diversity or not diversity_weight:
        return forecast
    summed = diversity[0]
    for term in diversity[1:]:
        summed = summed + term
    return forecast + summed * diversity_weight
