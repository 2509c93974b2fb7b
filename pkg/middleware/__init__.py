from .exit_codes import EXIT_INPUT, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, VerificationFailed, cli_command

__all__ = ['cli_command', 'VerificationFailed', 'EXIT_OK', 'EXIT_INPUT', 'EXIT_SOLVER', 'EXIT_VERIFY']
