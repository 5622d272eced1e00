"""Detection of negative-experience moments in videoconference recordings.

Subpackages cover the full pipeline: audio segmentation into candidate
clips, annotation aggregation, feature assembly, a linear SGD classifier,
semi-supervised wrappers, group-aware evaluation, hyperparameter search,
and synthetic corpus generation.  `fluidlab --help` lists the commands.
"""

__version__ = "0.1.0"
