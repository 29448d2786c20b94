"""Exception types shared across the package."""


class DataError(ValueError):
    """Invalid or inconsistent input data (CSV cells, record invariants)."""

    def __init__(self, message, row=None, path=None):
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if row is not None:
            prefix += f"row {row}: "
        super().__init__(prefix + message)
        self.row = row
        self.path = path


class ArtifactError(ValueError):
    """Problem reading or writing a persisted artifact file."""


class ArtifactVersionError(ArtifactError):
    """Artifact header carries an unknown format version or kind."""


class ArtifactIntegrityError(ArtifactError):
    """Artifact body does not match its recorded digest (truncated/corrupt)."""


class ConfigError(ValueError):
    """Invalid run configuration."""
