"""oclk: an executable engine for OCL constraints over object snapshots."""

__version__ = "0.1.0"
