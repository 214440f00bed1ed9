"""Decision layer: oracle rule, prompt builder, action parser and LLM supervisor."""

from agentshop.policy.llm import correction_line, decide_llm
from agentshop.policy.oracle import (
    DecisionContext,
    NoFeasibleDirection,
    StoreCapabilities,
    decide_oracle,
    make_context,
    useful_instances,
)
from agentshop.policy.parse import FormatError, InvalidDirection, parse_action
from agentshop.policy.prompt import OUTPUT_CONSTRAINT, build_prompt

__all__ = [
    "DecisionContext",
    "FormatError",
    "InvalidDirection",
    "NoFeasibleDirection",
    "OUTPUT_CONSTRAINT",
    "StoreCapabilities",
    "build_prompt",
    "correction_line",
    "decide_llm",
    "decide_oracle",
    "make_context",
    "parse_action",
    "useful_instances",
]
