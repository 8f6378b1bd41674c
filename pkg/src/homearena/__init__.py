"""homearena: a self-contained virtual apartment competition testbed.

Configure a scenario, launch the simulated world, referee a robot agent
over a newline-delimited JSON protocol, and score the final world state
against the scenario's rubric.
"""

from .reports import AchievementResult, ScoreReport
from .referee import RefereePhase, handle_message, run_benchmark, score
from .scenario import (
    Achievement,
    ContextEvent,
    Diagnostic,
    ScenarioError,
    ScenarioSpec,
    instantiate_world,
    parse_scenario,
    serialize_scenario,
    validate,
)
from .world import (
    Command,
    Entity,
    Pose,
    Predicate,
    WorldState,
    Zone,
    apply_command,
    eval_predicate,
)

__version__ = "0.1.0"

__all__ = [
    "Achievement",
    "AchievementResult",
    "Command",
    "ContextEvent",
    "Diagnostic",
    "Entity",
    "Pose",
    "Predicate",
    "RefereePhase",
    "ScenarioError",
    "ScenarioSpec",
    "ScoreReport",
    "WorldState",
    "Zone",
    "apply_command",
    "eval_predicate",
    "handle_message",
    "instantiate_world",
    "parse_scenario",
    "run_benchmark",
    "score",
    "serialize_scenario",
    "validate",
    "__version__",
]
