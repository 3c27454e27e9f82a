"""Exception types shared across the package."""


class ShadowLabError(Exception):
    pass


class HorizonError(ShadowLabError, ValueError):
    """A flow was asked for a time outside its configured horizon."""


class IntegrationError(ShadowLabError, RuntimeError):
    """The ODE integrator failed to reach the requested time."""


class GridError(ShadowLabError, ValueError):
    """A certificate or trace grid is coarser than allowed or does not cover the window."""


class ConfigError(ShadowLabError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class ConstructionError(ShadowLabError, ValueError):
    """A pseudo-orbit construction was requested outside its valid range."""


class ModelError(ShadowLabError, ValueError):
    """A model failed its registration checks or a precondition."""
