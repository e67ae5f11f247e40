"""Benchmark drivers: convergence study, Gresho conservation, vortex decay.

A BenchmarkConfig collects every run parameter; configs can be read from
key=value files and overridden per key.  Drivers write one CSV per run
(schema in diagnostics.CSV_COLUMNS) into the output directory, which the
NSRECON_OUTPUT_DIR environment variable overrides.  Runs are
deterministic: identical configs produce bit-identical files.
"""

import csv
import os

import numpy as np

from . import problems
from .diagnostics import (CSV_COLUMNS, ErrorNorms, conserved_quantities,
                          eoc, write_csv)
from .forms import CONVECTION_FORMS
from .mesh import build_uniform_square_mesh, read_mesh, shape_regularity
from .reconstruction import seminorm_star
from .timestepping import Stepper

_PROBLEM_DEFAULTS = {
    'potential_flow': dict(nu=5e-4, dt=1e-3, T=0.1, scheme='bdf2', n=8,
                           levels=4, error_times='final',
                           init='interpolate'),
    # conservation runs need an initial field that is discretely
    # divergence-free (a plain interpolant lets the first step do pressure
    # work on the divergence defect) AND still compactly supported (the
    # momentum balances hold only while the vortex stays off the walls;
    # the global Stokes projection smears mass into the wall band).  The
    # Leray projection is the one initializer with both properties.
    'gresho': dict(nu=0.0, dt=1e-2, T=10.0, scheme='cn', n=48, levels=1,
                   error_times='final', init='leray'),
    'lattice_vortex': dict(nu=1e-5, dt=1e-3, T=2.0, scheme='cn_lin', n=32,
                           levels=1, error_times='all', init='interpolate'),
    'manufactured': dict(nu=1.0, dt=0.1, T=0.5, scheme='cn', n=4, levels=1,
                         error_times='final', init='interpolate'),
}

_SCHEMES = ('cn', 'cn_lin', 'bdf2')
_ELEMENTS = ('br', 'p2b')

ERROR_COLUMNS = ('err_L2_u', 'err_L2_Pu', 'err_H1_u', 'err_L2_p',
                 'err_L2_Php', 'seminorm_star')


class BenchmarkConfig:
    """Parameter bundle for one benchmark invocation.

    Parameters
    ----------
    problem : str
        One of potential_flow, gresho, lattice_vortex, manufactured.
        Selects the exact solution and the per-problem defaults for
        nu, dt, T, scheme, n, levels and error_times.
    **overrides
        Any config key.  Unknown keys raise ValueError.

    Notes
    -----
    Config files are plain text, one ``key = value`` pair per line,
    ``#`` starts a comment.  `error_times` is 'final', 'all', or a
    comma-separated list of times that must lie on the step grid.
    """

    _FLOAT = ('alpha', 'nu', 'dt', 'T', 'tol', 'f_amplitude')
    _INT = ('n', 'levels', 'max_iterations')
    _BOOL = ('newton',)
    _STR = ('problem', 'element', 'form', 'scheme', 'mesh_file',
            'output_dir', 'error_times', 'init')

    def __init__(self, problem='potential_flow', **overrides):
        if problem not in _PROBLEM_DEFAULTS:
            raise ValueError('unknown problem %r' % (problem,))
        fields = dict(element='br', form='emapr', alpha=0.0, newton=False,
                      tol=1e-6, max_iterations=40, f_amplitude=0.0,
                      mesh_file=None, output_dir='.')
        fields.update(_PROBLEM_DEFAULTS[problem])
        for key, val in overrides.items():
            if key not in fields:
                raise ValueError('unknown config key %r' % (key,))
            fields[key] = val
        self.problem = problem
        for key, val in fields.items():
            setattr(self, key, val)
        self.validate()

    @classmethod
    def coerce(cls, key, text):
        """Convert the string form of a config value to its native type."""
        if key in cls._FLOAT:
            return float(text)
        if key in cls._INT:
            return int(text)
        if key in cls._BOOL:
            if text.lower() in ('1', 'true', 'yes', 'on'):
                return True
            if text.lower() in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError('bad boolean %r for %s' % (text, key))
        if key == 'problem' or key in cls._STR:
            return text
        raise ValueError('unknown config key %r' % (key,))

    @classmethod
    def from_strings(cls, pairs):
        """Build a config from (key, value-string) pairs.

        The problem key is applied first so its defaults do not clobber
        explicit settings.
        """
        items = dict(pairs)
        problem = items.pop('problem', 'potential_flow')
        overrides = {k: cls.coerce(k, v) if isinstance(v, str) else v
                     for k, v in items.items()}
        return cls(problem=problem, **overrides)

    def validate(self):
        if self.alpha < 0:
            raise ValueError('alpha must be nonnegative')
        if self.dt <= 0:
            raise ValueError('dt must be positive')
        if self.T < self.dt:
            raise ValueError('T must be at least dt')
        if self.element not in _ELEMENTS:
            raise ValueError('unknown element %r' % (self.element,))
        if self.form not in CONVECTION_FORMS:
            raise ValueError('unknown convection form %r' % (self.form,))
        if self.scheme not in _SCHEMES:
            raise ValueError('unknown scheme %r' % (self.scheme,))
        if self.mesh_file is None and self.n < 1:
            raise ValueError('mesh resolution must be positive')
        if self.levels < 1:
            raise ValueError('levels must be positive')
        if self.mesh_file is not None and self.levels != 1:
            raise ValueError('refinement levels need generated meshes')
        if self.tol <= 0 or self.max_iterations < 1:
            raise ValueError('bad nonlinear settings')
        if self.init not in ('interpolate', 'stokes', 'leray'):
            raise ValueError('unknown initializer %r' % (self.init,))
        self.error_steps(int(round(self.T / self.dt)))

    def replaced(self, **changes):
        """Copy of this config with some fields replaced."""
        fields = {k: getattr(self, k) for k in
                  ('element', 'form', 'alpha', 'newton', 'tol',
                   'max_iterations', 'f_amplitude', 'mesh_file',
                   'output_dir', 'nu', 'dt', 'T', 'scheme', 'n', 'levels',
                   'error_times', 'init')}
        fields.update(changes)
        problem = fields.pop('problem', self.problem)
        return BenchmarkConfig(problem=problem, **fields)

    def error_steps(self, nsteps):
        """Set of step indices at which error norms are recorded."""
        spec_ = self.error_times
        if spec_ == 'final':
            return {nsteps}
        if spec_ == 'all':
            return set(range(nsteps + 1))
        steps = set()
        for tok in str(spec_).split(','):
            t = float(tok)
            k = int(round(t / self.dt))
            if not (0 <= k <= nsteps) or abs(k * self.dt - t) > 1e-9 * max(1.0, t):
                raise ValueError('error time %g not on the step grid' % t)
            steps.add(k)
        return steps

    def outdir(self):
        path = os.environ.get('NSRECON_OUTPUT_DIR', self.output_dir)
        os.makedirs(path, exist_ok=True)
        return path

    def tag(self):
        stem = '%s_%s_%s_alpha%g' % (self.problem, self.element, self.form,
                                     self.alpha)
        if self.f_amplitude:
            stem += '_f%g' % self.f_amplitude
        return stem

    def solution(self):
        if self.problem == 'potential_flow':
            return problems.potential_flow(self.nu, self.f_amplitude)
        if self.problem == 'gresho':
            return problems.gresho()
        if self.problem == 'lattice_vortex':
            return problems.lattice_vortex(self.nu)
        return problems.manufactured(self.nu)

    def build_mesh(self, n=None):
        if self.mesh_file is not None:
            return read_mesh(self.mesh_file)
        sol = self.solution()
        return build_uniform_square_mesh(self.n if n is None else n,
                                         box=sol.box)


def load_config_file(path):
    """Read ``key = value`` lines into a list of string pairs."""
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ValueError('%s:%d: expected key=value' % (path, lineno))
            key, val = line.split('=', 1)
            pairs.append((key.strip(), val.strip()))
    return pairs


def run_time_series(config, mesh=None, sol=None):
    """Integrate one configuration and collect per-step diagnostics.

    Conservation quantities and the reconstruction seminorm are recorded
    at every step; error norms only at the configured times (they use
    degree-10 quadrature and dominate the cost when taken per step).

    Returns
    -------
    records : list of dict
        One CSV_COLUMNS record per time level, including t=0.
    stepper : Stepper
        The integrator, exposing spaces and assembler for follow-ups.
    """
    if sol is None:
        sol = config.solution()
    if mesh is None:
        mesh = config.build_mesh()
    bc = 'no_penetration' if config.problem == 'gresho' else 'full'
    stepper = Stepper(mesh, config.element, config.form, config.alpha,
                      sol.nu, config.dt, scheme=config.scheme, bc_mode=bc,
                      f=sol.f, g=sol.u, newton=config.newton,
                      tol=config.tol, max_iterations=config.max_iterations)
    norms = ErrorNorms(stepper.V, stepper.P, stepper.X, stepper.ops)
    nsteps = int(round(config.T / config.dt))
    wanted = config.error_steps(nsteps)
    records = []

    def on_step(k, t, u, p):
        rec = dict.fromkeys(CSV_COLUMNS, np.nan)
        rec['t'] = t
        E, E_d, M, M_x = conserved_quantities(stepper.fa, u, config.alpha)
        rec['E'], rec['E_d'] = E, E_d
        rec['M_sum'], rec['M_x'] = M[0] + M[1], M_x
        rec['seminorm_star'] = seminorm_star(stepper.ops, u)
        if k in wanted:
            rec.update(norms(u, p, sol, t))
        records.append(rec)

    if config.init == 'stokes':
        u0 = stepper.stokes_projection(lambda pts: sol.grad_u(0.0, pts))
    elif config.init == 'leray':
        u0 = stepper.leray_projection(sol.u0)
    else:
        u0 = stepper.initial_condition(sol.u0)
    stepper.run(u0, config.T, on_step=on_step)
    return records, stepper


def run_single(config, mesh=None):
    """Run one configuration and write its time-series CSV.

    Returns (records, csv path).
    """
    sol = config.solution()
    if mesh is None:
        mesh = config.build_mesh()
    records, _ = run_time_series(config, mesh=mesh, sol=sol)
    path = os.path.join(config.outdir(),
                        config.tag() + '_n%d.csv' % config.n)
    write_csv(path, records)
    return records, path


def run_potential_flow(config):
    """Convergence study on a sequence of uniformly refined meshes.

    Writes one time-series CSV per level plus a summary CSV (one row per
    level: n, h, final-time errors) suitable for the eoc table.

    Returns (level rows, summary path).
    """
    if config.problem != 'potential_flow':
        raise ValueError('config is for %r' % (config.problem,))
    sol = config.solution()
    rows = []
    for lev in range(config.levels):
        n = config.n * 2 ** lev
        mesh = config.build_mesh(n)
        records, stepper = run_time_series(config, mesh=mesh, sol=sol)
        path = os.path.join(config.outdir(),
                            config.tag() + '_n%d.csv' % n)
        write_csv(path, records)
        row = {'n': n, 'h': stepper.mesh.geom.h.max()}
        for col in ERROR_COLUMNS:
            row[col] = records[-1][col]
        rows.append(row)
    summary = os.path.join(config.outdir(), config.tag() + '_levels.csv')
    write_levels_csv(summary, rows)
    return rows, summary


def run_gresho(config):
    if config.problem != 'gresho':
        raise ValueError('config is for %r' % (config.problem,))
    return run_single(config)


def run_lattice_vortex(config):
    if config.problem != 'lattice_vortex':
        raise ValueError('config is for %r' % (config.problem,))
    return run_single(config)


def run_benchmark(config):
    """Dispatch on config.problem; multi-level only for potential_flow."""
    if config.problem == 'potential_flow' and config.levels > 1:
        return run_potential_flow(config)
    return run_single(config)


def compare_forms(config, forms):
    """Run several convection forms on the identical mesh and stepping.

    Returns {form: csv path}.
    """
    mesh = config.build_mesh()
    paths = {}
    for form in forms:
        cfg = config.replaced(form=form)
        _, path = run_single(cfg, mesh=mesh)
        paths[form] = path
    return paths


def write_levels_csv(path, rows):
    """Per-level summary: n, h, then the error columns."""
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(('n', 'h') + ERROR_COLUMNS)
        for row in rows:
            out = ['%d' % row['n'], '%.16e' % row['h']]
            for col in ERROR_COLUMNS:
                val = row[col]
                out.append('nan' if np.isnan(val) else '%.16e' % val)
            writer.writerow(out)


def read_levels_csv(path):
    rows = []
    with open(path, newline='') as fh:
        for rec in csv.DictReader(fh):
            row = {'n': int(rec['n']), 'h': float(rec['h'])}
            for key, val in rec.items():
                if key not in ('n', 'h'):
                    row[key] = float(val)
            rows.append(row)
    return rows


def format_eoc_table(rows, columns=None):
    """Textual rate table from per-level summary rows.

    Rates are log(e_prev/e)/log(h_prev/h) between consecutive levels;
    blank where an error vanishes or is missing.
    """
    if columns is None:
        columns = [c for c in (rows[0].keys() if rows else ())
                   if c not in ('n', 'h')]
    hs = [row['h'] for row in rows]
    lines = []
    header = '%6s %10s' % ('n', 'h')
    for col in columns:
        header += ' %12s %6s' % (col, 'eoc')
    lines.append(header)
    rates = {col: eoc(hs, [row[col] for row in rows]) for col in columns}
    for i, row in enumerate(rows):
        line = '%6d %10.4e' % (row['n'], row['h'])
        for col in columns:
            val = row[col]
            cell = '%12.4e' % val if np.isfinite(val) else '%12s' % '-'
            rate = rates[col][i - 1] if i > 0 else None
            line += ' %s %6s' % (cell,
                                 '%.2f' % rate if rate is not None else '')
        lines.append(line)
    return '\n'.join(lines)


def mesh_statistics(mesh):
    """Size and quality numbers reported by the mesh subcommand."""
    return {'vertices': mesh.num_vertices, 'edges': mesh.num_edges,
            'cells': mesh.num_cells, 'h_max': mesh.geom.h.max(),
            'h_min': mesh.geom.h.min(),
            'shape_regularity': shape_regularity(mesh)}
