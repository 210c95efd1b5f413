"""Numerical laboratory for finite-time blow-up of u_tt - Δu = u_t|u_t|^(p-1)."""

__version__ = "0.1.0"
