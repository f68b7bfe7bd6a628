"""One-step and two-step abusive language classification.

CharCNN, WordCNN and HybridCNN classifiers built on a small numpy autodiff
core, char n-gram LR/SVM and FastText-style baselines, and the
cross-validation harness that compares a single three-class classifier with
an abusive-detector followed by a racism/sexism classifier.
"""

__version__ = "0.1.0"
