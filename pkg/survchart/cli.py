"""
Console entry point: ``survchart <subcommand> [options]``.

Subcommands are the monitoring app's management commands; hyphenated names
map onto their module names (control-limit -> control_limit).
"""
import os
import sys

SUBCOMMANDS = (
    'assist', 'fit-glm', 'fit-cox', 'funnel', 'bernoulli', 'bk', 'cgr',
    'control-limit', 'simulate', 'runlength', 'plot',
)


def main(argv=None):
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "survchart.settings")
    from django.core.management import execute_from_command_line

    argv = list(sys.argv if argv is None else argv)
    if len(argv) < 2 or argv[1] in ('-h', '--help', 'help'):
        sys.stdout.write("usage: survchart <subcommand> [options]\n\nsubcommands:\n")
        for name in SUBCOMMANDS:
            sys.stdout.write(f"  {name}\n")
        return 0
    argv[1] = argv[1].replace('-', '_')
    execute_from_command_line(['survchart', *argv[1:]])
    return 0


if __name__ == "__main__":
    sys.exit(main())
