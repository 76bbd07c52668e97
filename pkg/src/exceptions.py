class OmnikitError(Exception):
    """Base class for every error raised by omnikit."""


class GraphValidationError(OmnikitError, ValueError):
    pass


class WeightValidationError(OmnikitError, ValueError):
    pass


class ModelError(OmnikitError, ValueError):
    pass


class FactorizationError(OmnikitError):
    pass


class QPError(OmnikitError):
    pass


class QPInfeasibleError(QPError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class Corr2OmniError(OmnikitError):
    pass


class PipelineError(OmnikitError):
    def __init__(self, stage, message, exit_code=1):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
        self.exit_code = exit_code
