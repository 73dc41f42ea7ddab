"""instructmill: mills labeled text corpora into instruction-tuning datasets.

The pipeline ingests manifest-declared datasets, preprocesses them
(dedup, label unification, short-text filtering, stratified splits),
attaches generated instructions, exports chat-format training files under
one of four global orderings, and scores model predictions with the
matching per-dataset metric, ending in comparison reports and a
signed-rank test between configurations.
"""

__version__ = "0.1.0"
