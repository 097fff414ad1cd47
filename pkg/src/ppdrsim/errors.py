class ConfigurationError(ValueError):
    """Invalid configuration, detected before any simulation work."""
