from __future__ import annotations

from .metrics import Predictor, class_thirds, evaluate, macro_mean, score

__all__ = ["Predictor", "class_thirds", "evaluate", "macro_mean", "score"]
