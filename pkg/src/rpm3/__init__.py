"""Rateless double-sided z-private distributed matrix multiplication.

Core package: field algebra, Lagrange pair encoding, factored Fountain
coding with a peeling decoder, the coordinator state machine, stochastic
service-time simulation, closed-form rate/waiting-time analysis, fixed-rate
and load-balancing baselines, and an exhaustive privacy audit. A FastAPI
service (rpm3.service) exposes simulate/analyze/audit; the CLI (rpm3.cli)
is a thin client over it.
"""

__version__ = "0.1.0"
