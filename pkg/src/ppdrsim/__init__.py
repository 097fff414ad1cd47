"""Link-level and scenario-level simulation of a hybrid LTE/satellite
public-safety network."""

__version__ = "0.1.0"
