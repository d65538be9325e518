"""Problem-file driven command line."""
from .main import EXIT_FAIL, EXIT_INTERNAL, EXIT_PASS, EXIT_USAGE, Report, UsageError, main, run
from .problem import ProblemError, ProblemFile, load_fixtures, parse_problem_file, parse_problem_text

__all__ = ["main", "run", "Report", "UsageError", "ProblemError", "ProblemFile", "load_fixtures",
           "parse_problem_file", "parse_problem_text", "EXIT_PASS", "EXIT_FAIL", "EXIT_USAGE", "EXIT_INTERNAL"]
