"""autolin: automata-presented linear orders.

Word/tree/weighted automata, comparators on their languages, a rigidity
decider for lexicographic orders on regular languages, two-counter
machines, and the reductions that turn polynomials and counter machines
into automatic linear orders, with a verification harness over finite
samples.
"""

__version__ = "0.1.0"
