from .config import ConfigError, load_config, RunConfig
from .features import DegenerateSplitError
from .stat_models import DegenerateTestError, NonConvergenceError, SingularFitError, \
    SpecificationError
from .surrogate import IncompatibleTransferError, SchemaError, TrainingDivergedError


__all__ = [
    "ConfigError",
    "DegenerateSplitError",
    "DegenerateTestError",
    "IncompatibleTransferError",
    "load_config",
    "NonConvergenceError",
    "RunConfig",
    "SchemaError",
    "SingularFitError",
    "SpecificationError",
    "TrainingDivergedError",
]
