"""Error types shared across the pipeline."""


class ValidationError(ValueError):
    """Bad input data or configuration: malformed records, scheme mismatches,
    out-of-range parameters. The CLI maps this to exit status 1."""
