"""Desk-scale laboratory for cyclic SO0(n,n+1)/G2' surface geometry."""

__version__ = "0.1.0"
