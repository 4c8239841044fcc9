class SDDEError(Exception):
    pass


class ConfigurationError(SDDEError, ValueError):
    """Invalid problem, grid or experiment settings."""


class CausalityError(SDDEError):
    """A delayed lookup asked for a state that has not been computed yet."""


class NonFiniteStateError(SDDEError, FloatingPointError):
    def __init__(self, step, state, stream=None, level=None):
        self.step = step
        self.state = state
        self.stream = stream
        self.level = level
        where = f"step {step}"
        if stream is not None:
            where += f", stream {stream}"
        if level is not None:
            where += f", level {level}"
        super().__init__(f"non-finite state at {where}: {state!r}")
