"""Layout-aesthetics metrics, shaped rewards, and group-advantage tooling."""

__version__ = "0.1.0"
