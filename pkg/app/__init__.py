"""Dirichlet-type approximation bounds on compact groups: U(N), tori and finite actions"""

__version__ = "0.1.0"
