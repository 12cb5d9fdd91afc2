"""Online conformal calibration with intermittent feedback.

The main entry point is :class:`IMOCP`, mirror descent on the pinball loss
with a mirror map built from a prior over conformal scores. ACI, I-ACI,
B-ACI and IB-ACI are provided as baselines.
"""

from .calibrators import (ACI, BACI, IACI, IBACI, IMOCP, Calibrator, StepSchedule,
                          lemma1_bounds, make_calibrator, regularized_argmin)
from .core import (CalibrationConfig, FeedbackEvent, PredictionInterval, ScoreRangeError,
                   StreamRecord, hindsight_quantile, miscoverage_indicator, quantile_loss)
from .feedback import FeedbackPolicy, draw_observation, make_event
from .metrics import (MetricsAccumulator, TheoryConstants, corollary1_rates, miscoverage_rate,
                      regret, theorem1_bound, theorem2_bound)
from .mirror import InverseMapError, MirrorMap
from .priors import Prior, Regularizer, Triangular, TruncatedGaussian, Uniform, prior_from_spec

__version__ = "0.1.0"

__all__ = [
    "ACI", "BACI", "IACI", "IBACI", "IMOCP", "Calibrator", "StepSchedule", "lemma1_bounds",
    "make_calibrator", "regularized_argmin", "CalibrationConfig", "FeedbackEvent",
    "PredictionInterval", "ScoreRangeError", "StreamRecord", "hindsight_quantile",
    "miscoverage_indicator", "quantile_loss", "FeedbackPolicy", "draw_observation", "make_event",
    "MetricsAccumulator", "TheoryConstants", "corollary1_rates", "miscoverage_rate", "regret",
    "theorem1_bound", "theorem2_bound", "InverseMapError", "MirrorMap", "Prior", "Regularizer",
    "Triangular", "TruncatedGaussian", "Uniform", "prior_from_spec",
]
