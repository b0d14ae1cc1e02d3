"""Group comparison of axial direction fields with Watson statistics and FDR."""

__version__ = "0.1.0"
