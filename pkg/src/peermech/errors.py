from __future__ import annotations

import os


class PeerMechError(ValueError):
    """Domain error: malformed input or a violated precondition."""


class InvalidEnvironment(PeerMechError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class GuardExceeded(PeerMechError):
    """An exhaustive computation would exceed its configured size limit."""

    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: size {size} exceeds guard {limit}")


# Default limits. The enumeration guard can be overridden through the environment.
LP_VARIABLE_GUARD = 5_000
BB_NODE_GUARD = 10_000_000
HOLE_SEARCH_GUARD = 5_000
JURY_AGENT_GUARD = 16
SYMMETRIC_AGENT_GUARD = 5
REDUCTION_SOURCE_GUARD = 7


def enumeration_guard() -> int:
    raw = os.environ.get("PEERMECH_GUARD_VERTICES")
    if raw:
        return int(raw)
    return 18
