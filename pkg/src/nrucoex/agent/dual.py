from dataclasses import dataclass, replace


@dataclass(frozen=True)
class DualState:
    lam: float = 0.0
    eta: float = 0.1
    lambda_max: float = 10.0
    t0: int = 5
    epoch: int = 0


def dual_update(dual: DualState, epoch_slack: float) -> DualState:
    """Projected dual step: lambda <- clamp(lambda - eta * slack, 0, lambda_max).

    ``epoch_slack`` is the mean normalised slack over the finished epoch, so a
    violated constraint (negative slack) raises the multiplier.
    """
    lam = min(max(dual.lam - dual.eta * epoch_slack, 0.0), dual.lambda_max)
    return replace(dual, lam=lam, epoch=dual.epoch + 1)
