class InputError(ValueError):
    """Raised for malformed inputs: dimension mismatches, invalid parameters, bad configs."""
