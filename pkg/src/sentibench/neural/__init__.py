"""BiLSTM + attention classifier implemented with numpy (manual backprop)."""

from .estimator import BiLSTMAttentionClassifier
from .model import HyperParams

__all__ = ["BiLSTMAttentionClassifier", "HyperParams"]
