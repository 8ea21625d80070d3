"""Simultaneous estimation of state moments, polynomial functionals and
observable-weighted functionals with reset-based SWAP-test circuits."""

__version__ = "0.1.0"
