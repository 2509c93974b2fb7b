from functools import wraps
import logging

from pydantic import ValidationError

from services.optimizer import InfeasibleError, SolverError
from services.oracle import OracleError
from utils.config_parser import ScenarioFormatError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4


class VerificationFailed(Exception):
    """A verified solution did not pass its checks"""


def cli_command(f):
    """
    Decorator mapping a subcommand's exceptions to process exit codes

    Usage:
        @cli_command
        def cmd_solve(args):
            ...
            return EXIT_OK
    """
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            code = f(*args, **kwargs)
            return EXIT_OK if code is None else code
        except VerificationFailed as e:
            logger.error(f"Verification failed: {e}")
            return EXIT_VERIFY
        except SolverError as e:
            logger.error(f"Solver failed: {e} (state: {e.state})")
            return EXIT_SOLVER
        except ScenarioFormatError as e:
            logger.error(f"Bad input: {e}")
            return EXIT_INPUT
        except InfeasibleError as e:
            logger.error(f"Infeasible allocation: {e}")
            return EXIT_SOLVER
        except (OracleError, ValidationError, ValueError) as e:
            logger.error(f"Invalid input: {e}")
            return EXIT_INPUT
        except OSError as e:
            logger.error(f"Cannot access {e.filename or 'file'}: {e.strerror or e}")
            return EXIT_INPUT

    return decorated_function
