import os

DEFAULT_MAX_QUBITS = 14
ENV_MAX_QUBITS = "MOMENT_SPEC_MAX_QUBITS"


def max_qubits() -> int:
    """Simulator cap on live qubits; overridable through the environment."""
    raw = os.environ.get(ENV_MAX_QUBITS)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_QUBITS
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_MAX_QUBITS} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{ENV_MAX_QUBITS} must be positive, got {value}")
    return value
