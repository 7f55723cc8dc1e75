"""Continuous-logic workbench: certified evaluation, affine normal forms and Herbrand covers."""
__version__ = "0.1.0"
