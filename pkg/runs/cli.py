# runs/cli.py

from runs.management.commands.solitons import Command


def run_command(argv, stdout=None, stderr=None) -> int:
    """
    Run ``manage.py solitons`` with ``argv`` in-process and return its exit code.

    Django settings must already be configured.
    """
    command = Command(stdout=stdout, stderr=stderr)
    try:
        command.run_from_argv(["manage.py", "solitons", *argv])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
