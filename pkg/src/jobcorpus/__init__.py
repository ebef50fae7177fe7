"""jobcorpus: build a labeled job-posting corpus over an occupation taxonomy.

The package pairs an embedding-based similarity assigner, a majority-vote
review queue, and iteratively retrained from-scratch classifiers (SVM and
random forest) into a human-in-the-loop corpus construction pipeline.
"""

__version__ = "0.1.0"
