"""persenc: staircase-encoded multiparameter persistence modules over prime fields."""

__version__ = "0.1.0"
