"""Exception types shared by the library and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid user configuration (CLI exit code 2)."""

    exit_code = 2


class ConvergenceError(RuntimeError):
    """A numerical procedure failed its own convergence check (exit code 3)."""

    exit_code = 3


class DomainError(ValueError):
    """Inputs outside the physical domain of a formula (exit code 4)."""

    exit_code = 4
