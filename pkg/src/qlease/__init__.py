"""Desk-scale simulation of authentication-based copy protection and
software leasing for point functions, with exact oracles and security
game harnesses."""

from . import copyprotect, designs, games, leasing, qas, qmath, suite

__all__ = ["copyprotect", "designs", "games", "leasing", "qas", "qmath", "suite"]

__version__ = "0.1.0"
