"""Cavity-coupled Kitaev chain simulations: reduced Rabi-like models, a
full-chain oracle, ramp dynamics, Berry phases and photon cat states."""

__version__ = "0.1.0"
