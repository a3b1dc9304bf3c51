"""coherencekit: coherence evaluation for discourse-level text classifiers."""

__version__ = "0.1.0"
