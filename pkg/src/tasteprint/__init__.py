"""Toolchain for slicing food models and planning airbrushed seasoning sprays."""

__version__ = "0.1.0"

SCHEMA_VERSION = 1
