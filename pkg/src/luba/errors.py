"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`LubaError`
so the CLI can map domain failures to exit code 1.
"""


class LubaError(Exception):
    pass


class MoneyError(LubaError, ValueError):
    """Amount has sub-cent precision or is otherwise not representable."""


class DegenerateInputError(LubaError, ValueError):
    pass


class PreconditionError(LubaError, ValueError):
    """Hypotheses of a closed-form result or operation preconditions are not met."""


class BudgetExceededError(LubaError):
    def __init__(self, terms, budget):
        super().__init__(f"enumeration needs {terms} terms, budget is {budget}")
        self.terms = terms
        self.budget = budget


class NoInteriorMaximumError(LubaError):
    pass


class RecordValidationError(LubaError, ValueError):
    pass


class EmptyHistoryError(LubaError, ValueError):
    pass


class DynamicAuctionError(LubaError):
    """Base for rejected submissions in the dynamic engine."""

    kind = "error"


class DuplicateBidError(DynamicAuctionError):
    kind = "duplicate_own_bid"


class BudgetExhaustedError(DynamicAuctionError):
    kind = "budget_exhausted"


class AuctionClosedError(DynamicAuctionError):
    kind = "auction_closed"


class NotOwnBidError(DynamicAuctionError):
    kind = "not_own_bid"
