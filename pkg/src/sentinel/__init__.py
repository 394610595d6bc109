"""Alert generation for human-supervised multi-robot missions.

The package turns per-robot instruction sets into state machines, forward
simulates the fleet under stochastic disturbance models, evaluates metric
temporal logic specifications over the simulated traces, and escalates to
graph-reachability proofs when an impossibility can be guaranteed rather
than estimated. An HTTP service and CLI expose the pipeline to supervisor
tooling.
"""

__version__ = "0.1.0"
