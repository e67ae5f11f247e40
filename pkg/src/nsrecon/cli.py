"""Command line front end.

Subcommands
-----------
mesh
    Build or load a mesh and write its size/quality statistics as CSV.
run
    Run one benchmark configuration (config file and/or flag overrides).
eoc
    Print a convergence-rate table from a per-level summary CSV.
compare
    Run several convection forms on the same mesh, one CSV each.

Every run flag mirrors a config key; ``--config FILE`` loads key=value
pairs first and explicit flags override them.  The NSRECON_OUTPUT_DIR
environment variable overrides the configured output directory.
"""

import argparse
import csv
import sys

from .benchmarks import (BenchmarkConfig, compare_forms, format_eoc_table,
                         load_config_file, mesh_statistics, read_levels_csv,
                         run_benchmark)
from .mesh import build_uniform_square_mesh, read_mesh, write_mesh

_CONFIG_FLAGS = ('problem', 'element', 'form', 'scheme', 'alpha', 'nu',
                 'dt', 'T', 'n', 'levels', 'mesh_file', 'newton', 'tol',
                 'max_iterations', 'f_amplitude', 'error_times', 'init',
                 'output_dir')


def _add_config_flags(parser):
    for key in _CONFIG_FLAGS:
        parser.add_argument('--' + key, dest=key, default=None,
                            metavar='VALUE')
    parser.add_argument('--config', default=None, metavar='FILE',
                        help='key=value config file; flags override')


def _gather_config(args):
    pairs = []
    if args.config:
        pairs.extend(load_config_file(args.config))
    for key in _CONFIG_FLAGS:
        val = getattr(args, key)
        if val is not None:
            pairs.append((key, val))
    return BenchmarkConfig.from_strings(pairs)


def _cmd_mesh(args):
    if args.input:
        mesh = read_mesh(args.input)
    else:
        mesh = build_uniform_square_mesh(args.n)
    stats = mesh_statistics(mesh)
    writer = csv.writer(sys.stdout)
    writer.writerow(stats.keys())
    writer.writerow('%.16e' % v if isinstance(v, float) else '%d' % v
                    for v in stats.values())
    if args.output:
        write_mesh(mesh, args.output)
    return 0


def _cmd_run(args):
    config = _gather_config(args)
    result = run_benchmark(config)
    if config.problem == 'potential_flow' and config.levels > 1:
        rows, summary = result
        print(format_eoc_table(rows))
        print('summary written to', summary)
    else:
        _, path = result
        print('time series written to', path)
    return 0


def _cmd_eoc(args):
    rows = read_levels_csv(args.input)
    print(format_eoc_table(rows))
    return 0


def _cmd_compare(args):
    config = _gather_config(args)
    forms = [f.strip() for f in args.forms.split(',') if f.strip()]
    if not forms:
        raise ValueError('no forms given')
    paths = compare_forms(config, forms)
    for form in forms:
        print('%s: %s' % (form, paths[form]))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog='nsrecon',
        description='Reconstruction-based Navier-Stokes benchmarks.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('mesh', help='mesh statistics as CSV')
    p.add_argument('--n', type=int, default=8,
                   help='squares per side, each split along one diagonal '
                        '(default 8)')
    p.add_argument('--input', default=None, help='read mesh from file')
    p.add_argument('--output', default=None, help='also write mesh to file')
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser('run', help='run one benchmark configuration')
    _add_config_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser('eoc', help='rate table from a summary CSV')
    p.add_argument('--input', required=True, help='per-level summary CSV')
    p.set_defaults(func=_cmd_eoc)

    p = sub.add_parser('compare', help='run several forms, shared mesh')
    p.add_argument('--forms', required=True,
                   help='comma-separated convection forms')
    _add_config_flags(p)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print('error: %s' % exc, file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
