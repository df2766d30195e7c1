#!/usr/bin/env python
"""Django's command-line utility; also the NeuHash-CF pipeline entry point."""
import os
import sys


def cap_threads(argv):
    """Honour `--threads N` before numpy loads its BLAS pools."""
    for position, arg in enumerate(argv):
        if arg == '--threads' and position + 1 < len(argv):
            threads = argv[position + 1]
        elif arg.startswith('--threads='):
            threads = arg.split('=', 1)[1]
        else:
            continue
        for var in ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS', 'NUMBA_NUM_THREADS'):
            os.environ.setdefault(var, threads)
        return


def main():
    """Run administrative tasks."""
    cap_threads(sys.argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
