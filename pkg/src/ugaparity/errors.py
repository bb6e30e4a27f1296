class CapabilityError(RuntimeError):
    """Request exceeds what can be computed (exhaustive size, too few runs to bin)."""
