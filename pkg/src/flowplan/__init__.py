"""Forward numeric planner with an LP-tightened relaxed planning graph heuristic."""

__version__ = "0.1.0"
