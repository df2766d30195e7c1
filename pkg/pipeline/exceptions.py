class ConfigError(ValueError):
    """Invalid or contradictory RunConfig; raised before any work is done."""

    def __init__(self, errors):
        self.errors = errors
        super().__init__(f"invalid configuration: {errors}")
