"""Conservation laws, multipliers and symmetries of PDE systems in jet space."""

__version__ = "0.1.0"
