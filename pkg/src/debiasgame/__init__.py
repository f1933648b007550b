"""Collaborative data-debiasing game.

Players edit the edge weights of a causal model fitted to a tabular
dataset, the engine regenerates the dataset from the edited model, and
group-based scores plus fairness metrics track who gains and who loses.
A unanimous stop vote freezes the debiased dataset for export.
"""

__version__ = "0.1.0"
