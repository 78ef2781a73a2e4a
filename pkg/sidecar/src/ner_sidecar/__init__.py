"""NER sidecar: model serving and fine-tuning for the de-identification toolkit."""

__version__ = "0.1.0"
