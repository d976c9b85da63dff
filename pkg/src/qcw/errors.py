"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition or configuration contract."""


class PricePositivityError(RuntimeError):
    """A simulated trade price dropped to zero or below.

    The price-level formulation is arithmetic, so large spreads or volatility
    can push a price negative. The simulator aborts rather than clamping
    (clamping would silently bias the recorded statistics).
    """

    def __init__(self, step: int, price: float):
        super().__init__(f"trade price {price:.6g} <= 0 at step {step}")
        self.step = step
        self.price = price
