"""Deployment-aware model selection toolkit.

Estimates a capability-cost frontier and context-dependent utility from
model/interaction data, solves the deployer's constrained selection problem
(continuous target plus discrete recommendation), computes comparative
statics, and serves deployment-aware leaderboards.
"""

__version__ = "0.1.0"
