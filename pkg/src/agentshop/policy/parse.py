"""Extract and validate a ``<dir>|||<act>`` command from free-form model output."""

from __future__ import annotations

import re

from agentshop.semantic import JunctionRecord
from agentshop.world_model import Action, Direction, StoreAction

# A lone digit, exactly three pipes, a lone digit. Neighbouring digits or pipes
# disqualify the match so "12|||3" and "1||||3" are not read as actions.
_CANDIDATE = re.compile(r"(?<![0-9|])([0-9])\|\|\|([0-9])(?![0-9|])")


class FormatError(ValueError):
    pass


class InvalidDirection(ValueError):
    pass


def parse_action(text: str, junction: JunctionRecord | None = None) -> Action:
    m = _CANDIDATE.search(text)
    if m is None:
        raise FormatError(f"no <dir>|||<act> command in {text[:80]!r}")
    d, a = int(m.group(1)), int(m.group(2))
    if d not in (1, 2, 3):
        raise FormatError(f"direction code {d} out of range")
    if a not in (1, 2, 3, 4, 5):
        raise FormatError(f"store action code {a} out of range")
    action = Action(Direction(d), StoreAction(a))
    if junction is not None and action.direction not in junction.directions:
        raise InvalidDirection(f"{action.direction.word} does not exist at {junction.id}")
    return action
