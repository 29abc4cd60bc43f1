"""Exception types shared across the package."""


class QasmSyntaxError(ValueError):
    """Malformed statement in a circuit file; carries the 1-based line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnsupportedGateError(QasmSyntaxError):
    """Gate acting on three or more qubits, or an unknown two-qubit mnemonic."""


class DisjointnessError(ValueError):
    """Two gates inside one time slice share a qubit."""


class DisconnectedDeviceError(ValueError):
    """Device coupling graph is not connected."""


class ShapeMismatchError(ValueError):
    """Matrix or mapping dimensions are inconsistent."""


class MappingError(ValueError):
    """Mapping is not injective, or the circuit does not fit the device."""


class IllegalActionError(ValueError):
    """Action edge is not part of the device coupling graph."""


class EpisodeFinishedError(RuntimeError):
    """step/legal_actions called on a finished or truncated episode."""


class NonSymmetricFlowError(ValueError):
    """Flow matrix fed to the encoder is not symmetric zero-diagonal."""


class SingularNormalizationError(ValueError):
    """Distance kernel has an all-zero row and cannot be normalized."""


class NonFiniteError(ArithmeticError):
    """A forward or gradient value is NaN or infinite."""
