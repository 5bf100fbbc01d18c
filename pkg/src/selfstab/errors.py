"""Exception hierarchy shared by every module."""


class SelfStabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SelfStabError, ValueError):
    """Invalid sizes, malformed joint strategies, out-of-range players."""


class ContractViolation(SelfStabError, RuntimeError):
    """A caller or a rule broke an operation's precondition.

    Examples: asking a scheduler for a move of a best-responding player,
    firing an unprivileged machine.
    """


class CorrespondenceViolation(SelfStabError):
    """A machine trace has no valid image as an improvement path."""


class BudgetExceeded(SelfStabError):
    """The explicit state space is larger than the configured node budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(
            f"state space has {required} nodes, node budget is {budget}; "
            f"raise it with SELFSTAB_NODE_BUDGET={required} or --node-budget"
        )
        self.required = required
        self.budget = budget


class UsageError(SelfStabError):
    """An operation was called on an argument it does not apply to."""
