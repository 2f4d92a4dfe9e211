"""slowforge: slow-SQL corpus generation, execution-verified rewards, and
group-relative policy alignment kernels."""

__version__ = "0.1.0"
