"""Lowest-unique-bid auction toolkit: equilibria, behavioral simulation, backtests."""

__version__ = "0.1.0"

from luba.errors import LubaError
from luba.core import AuctionConfig, Outcome, resolve, bidder_payoffs, seller_payoff

__all__ = [
    "__version__",
    "LubaError",
    "AuctionConfig",
    "Outcome",
    "resolve",
    "bidder_payoffs",
    "seller_payoff",
]
