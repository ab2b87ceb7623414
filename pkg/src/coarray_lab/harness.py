"""Config-driven Monte Carlo experiments over the closed-form analytics.

Each experiment kind reproduces one family of benchmark sweeps at desk
scale: ``verify_mse`` compares the closed-form MSE against simulation,
``resolution`` measures the probability of resolving a close pair,
``efficiency`` tabulates the CRB-to-MSE ratio, and ``scaling`` fits the
MSE decay rate against the number of sensors. Results are emitted as
CSV tables, gnuplot scripts, and a manifest keyed by the config hash.

Determinism contract: a run is a pure function of (config, seed). Trial
streams are derived from ``SeedSequence(seed, spawn_key=(combo, trial))``
so outputs do not depend on worker count or chunking.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import analysis, geometry, model
from .estimator import run_music

__all__ = [
    'ConfigError', 'ExperimentConfig', 'TrialRecord', 'Table',
    'load_config', 'config_digest', 'run', 'run_trials',
    'run_verify_mse', 'run_resolution', 'run_efficiency', 'run_scaling',
    'emit_outputs', 'fifty_percent_crossing',
]

_KINDS = ('verify_mse', 'resolution', 'efficiency', 'scaling')
_METHODS = ('da', 'ss', 'both')
_FAMILIES = ('coprime', 'nested', 'mra')
_K_MODES = ('one', 'm')

# Eleven equal-power sources, evenly placed over a 123.75 degree fan.
_DEFAULT_VERIFY_DOAS_DEG = tuple(np.linspace(-67.5, 56.25, 11))


class ConfigError(ValueError):
    """Raised when an experiment config is malformed."""


@dataclass(frozen=True)
class Table:
    """A named result table: a header tuple plus homogeneous rows."""

    header: tuple[str, ...]
    rows: tuple[tuple, ...]


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one Monte Carlo trial for one method.

    Attributes:
        trial_index: Trial number within its sweep combination.
        seed_key: ``(master_seed, combo_index, trial_index)``; the trial
            is reproducible from this key alone.
        estimates: Estimated DOAs in radians, ascending.
        errors: Signed per-source errors in radians; empty when the
            estimator returned fewer peaks than sources.
        resolved: Whether the estimator found one peak per source.
        method: ``'da'`` or ``'ss'``.
    """

    trial_index: int
    seed_key: tuple[int, int, int]
    estimates: tuple[float, ...]
    errors: tuple[float, ...]
    resolved: bool
    method: str


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment sweep.

    Angles are in degrees and SNRs in dB; conversion to radians happens
    inside the runners. Fields not used by the chosen kind are ignored.

    Attributes:
        kind: One of ``verify_mse``, ``resolution``, ``efficiency``,
            ``scaling``.
        arrays: Array specs like ``'coprime:3,5'`` or ``'mra:10'``.
        snr_db: SNR grid, defined as 10*log10(min_k p_k / noise power).
        n_snapshots: Snapshot-count grid.
        n_trials: Monte Carlo trials per sweep point.
        seed: Master seed; all trial streams derive from it.
        method: ``'da'``, ``'ss'``, or ``'both'``.
        out_dir: Output directory for :func:`emit_outputs`.
        doas_deg: Source placement for ``verify_mse``; None selects the
            default eleven-source fan.
        center_deg: Pair center for ``resolution``.
        delta_deg: Separation grid for ``resolution``; None selects
            0.3..3.0 degrees in 19 steps.
        k_sources: Source counts for ``efficiency``.
        q_range: Family size parameters for ``scaling``.
        families: Array families for ``scaling``.
        k_modes: ``'one'`` (single source at broadside) and/or ``'m'``
            (as many sources as sensors) for ``scaling``.
        grid_step_deg: MUSIC search grid step.
        power: Per-source power.
        empirical: Whether ``efficiency`` and ``scaling`` also run
            Monte Carlo trials next to the closed forms.
    """

    kind: str
    arrays: tuple[str, ...] = ('coprime:3,5', 'nested:4,6', 'mra:10')
    snr_db: tuple[float, ...] = (0.0,)
    n_snapshots: tuple[int, ...] = (500,)
    n_trials: int = 500
    seed: int = 20260818
    method: str = 'ss'
    out_dir: str = 'results'
    doas_deg: tuple[float, ...] | None = None
    center_deg: float = 30.0
    delta_deg: tuple[float, ...] | None = None
    k_sources: tuple[int, ...] = (1, 6, 12)
    q_range: tuple[int, ...] = tuple(range(2, 13))
    families: tuple[str, ...] = _FAMILIES
    k_modes: tuple[str, ...] = _K_MODES
    grid_step_deg: float = 0.1
    power: float = 1.0
    empirical: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f'kind must be one of {_KINDS}, got {self.kind!r}')
        if self.method not in _METHODS:
            raise ConfigError(f'method must be one of {_METHODS}, got {self.method!r}')
        if not self.arrays:
            raise ConfigError('at least one array spec is required')
        for spec in self.arrays:
            _parse_array(spec)
        if not self.snr_db or not all(math.isfinite(s) for s in self.snr_db):
            raise ConfigError('snr_db must be a non-empty list of finite values')
        if not self.n_snapshots or any(int(n) < 1 for n in self.n_snapshots):
            raise ConfigError('n_snapshots entries must be >= 1')
        if int(self.n_trials) < 1:
            raise ConfigError('n_trials must be >= 1')
        if not self.grid_step_deg > 0:
            raise ConfigError('grid_step_deg must be positive')
        if not self.power > 0:
            raise ConfigError('power must be positive')
        if not -90.0 < self.center_deg < 90.0:
            raise ConfigError('center_deg must lie inside (-90, 90)')
        if self.delta_deg is not None and any(d <= 0 for d in self.delta_deg):
            raise ConfigError('delta_deg entries must be positive')
        if any(k < 1 for k in self.k_sources):
            raise ConfigError('k_sources entries must be >= 1')
        if any(q < 2 for q in self.q_range):
            raise ConfigError('q_range entries must be >= 2')
        for fam in self.families:
            if fam not in _FAMILIES:
                raise ConfigError(f'families entries must be among {_FAMILIES}')
        for mode in self.k_modes:
            if mode not in _K_MODES:
                raise ConfigError("k_modes entries must be 'one' or 'm'")

    @classmethod
    def from_mapping(cls, mapping):
        """Build a config from a JSON-style mapping.

        Unknown keys are rejected so typos fail loudly instead of
        silently running the default.
        """
        if not isinstance(mapping, dict):
            raise ConfigError('config root must be an object')
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(mapping) - set(fields))
        if unknown:
            raise ConfigError(f'unknown config fields: {", ".join(unknown)}')
        if 'kind' not in mapping:
            raise ConfigError("config must set 'kind'")
        kwargs = {}
        for key, value in mapping.items():
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


def load_config(path):
    """Load an :class:`ExperimentConfig` from a JSON file."""
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f'cannot read config {path}: {exc}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f'config {path} is not valid JSON: {exc}') from exc
    return ExperimentConfig.from_mapping(data)


def config_digest(cfg):
    """SHA-256 over the canonical JSON form of the config."""
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True,
                         separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def _parse_array(spec):
    """Turn ``'kind:p1,p2,...'`` into an :class:`ArrayGeometry`."""
    kind, sep, rest = str(spec).partition(':')
    try:
        params = tuple(int(tok) for tok in rest.split(',') if tok.strip())
        if kind.strip().lower() == 'custom':
            return geometry.make_array('custom', params)
        return geometry.make_array(kind.strip(), *params)
    except ValueError as exc:
        raise ConfigError(f'bad array spec {spec!r}: {exc}') from exc


def _methods(method):
    return ('da', 'ss') if method == 'both' else (method,)


def _failure_gate(doas):
    """Largest error still attributable to its own source.

    Beyond half the minimum true separation the estimate-to-source
    pairing is ambiguous, so such trials count as failures. A lone
    source uses a fixed quarter-circle gate.
    """
    doas = np.sort(np.asarray(doas, dtype=float))
    if doas.size < 2:
        return np.pi / 4
    return 0.5 * float(np.min(np.diff(doas)))


def _chunk_worker(task):
    """Run a contiguous block of trials; returns plain tuples."""
    (geom, scenario, n_snapshots, methods, master_seed, combo_index,
     start, count, grid_step) = task
    co = geometry.difference_coarray(geom)
    f = geometry.selection_matrix(co)
    out = []
    for trial in range(start, start + count):
        seed = np.random.SeedSequence(entropy=master_seed,
                                      spawn_key=(combo_index, trial))
        snapshots = model.simulate_snapshots(geom, scenario, n_snapshots, seed)
        z = model.virtual_observation(f, model.sample_covariance(snapshots).r)
        per_method = []
        for method in methods:
            est = run_music(z, co.mv, scenario.n_sources, method=method,
                            grid_step=grid_step)
            per_method.append((method, bool(est.resolved),
                               tuple(float(a) for a in est.angles)))
        out.append((trial, per_method))
    return out


def run_trials(geom, scenario, n_snapshots, methods, master_seed,
               combo_index, n_trials, grid_step, threads=1):
    """Monte Carlo trials for one sweep point.

    DA and SS share each trial's snapshots so method comparisons see
    identical noise. Records are ordered by (trial, method) regardless
    of ``threads``.

    Returns:
        List of :class:`TrialRecord`.
    """
    methods = tuple(methods)
    n_trials = int(n_trials)
    if threads > 1:
        chunk = max(1, -(-n_trials // (threads * 8)))
    else:
        chunk = n_trials
    tasks = [(geom, scenario, int(n_snapshots), methods, int(master_seed),
              int(combo_index), start, min(chunk, n_trials - start),
              float(grid_step))
             for start in range(0, n_trials, chunk)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_chunk_worker, tasks))
    else:
        chunks = [_chunk_worker(t) for t in tasks]

    truth = np.asarray(scenario.doas, dtype=float)
    records = []
    for block in chunks:
        for trial, per_method in block:
            key = (int(master_seed), int(combo_index), trial)
            for method, resolved, angles in per_method:
                errors = ()
                if resolved and len(angles) == truth.size:
                    errors = tuple(float(a - t) for a, t in zip(angles, truth))
                records.append(TrialRecord(trial, key, angles, errors,
                                           resolved, method))
    return records


def _successes(records, method, gate):
    """Trials of one method that resolved inside the pairing gate."""
    ok = []
    for rec in records:
        if rec.method != method or not rec.resolved or not rec.errors:
            continue
        if max(abs(e) for e in rec.errors) < gate:
            ok.append(rec)
    return ok


def _mse_stats(ok_records):
    """Mean squared error over trials with its standard error."""
    if not ok_records:
        return float('nan'), float('nan')
    per_trial = np.array([np.mean(np.square(rec.errors))
                          for rec in ok_records])
    mse = float(np.mean(per_trial))
    if per_trial.size < 2:
        return mse, float('nan')
    se = float(np.std(per_trial, ddof=1) / np.sqrt(per_trial.size))
    return mse, se


def run_verify_mse(cfg, threads=1):
    """Closed-form MSE against simulation on a fixed source fan."""
    doas_deg = cfg.doas_deg if cfg.doas_deg is not None else _DEFAULT_VERIFY_DOAS_DEG
    doas = tuple(np.deg2rad(d) for d in doas_deg)
    methods = _methods(cfg.method)
    grid_step = np.deg2rad(cfg.grid_step_deg)
    gate = _failure_gate(doas)
    rows = []
    combo = 0
    for spec in cfg.arrays:
        geom = _parse_array(spec)
        for snr in cfg.snr_db:
            for n in cfg.n_snapshots:
                scenario = model.SourceScenario.with_snr(doas, snr, cfg.power)
                mse_an = float(np.mean(np.diag(
                    analysis.analytical_mse(geom, scenario, n))))
                records = run_trials(geom, scenario, n, methods, cfg.seed,
                                     combo, cfg.n_trials, grid_step, threads)
                for method in methods:
                    ok = _successes(records, method, gate)
                    mse_em, se = _mse_stats(ok)
                    rel = abs(mse_an - mse_em) / mse_em if ok else float('nan')
                    rows.append((geom.name, method, float(snr), int(n),
                                 cfg.n_trials, mse_an, mse_em, rel, se,
                                 cfg.n_trials - len(ok)))
                combo += 1
    header = ('array', 'method', 'snr_db', 'n_snapshots', 'trials',
              'mse_an_rad2', 'mse_em_rad2', 'rel_err', 'mse_em_se_rad2',
              'failed_trials')
    return {'verify_mse': Table(header, tuple(rows))}


def run_resolution(cfg, threads=1):
    """Probability of resolving a close pair against the predicted cutoff.

    A trial succeeds when the estimator returns two peaks and both fall
    within half the separation of their sources.
    """
    deltas = (cfg.delta_deg if cfg.delta_deg is not None
              else tuple(np.linspace(0.3, 3.0, 19)))
    center = np.deg2rad(cfg.center_deg)
    methods = _methods(cfg.method)
    grid_step = np.deg2rad(cfg.grid_step_deg)
    rows = []
    combo = 0
    for spec in cfg.arrays:
        geom = _parse_array(spec)
        for snr in cfg.snr_db:
            noise = cfg.power * 10.0 ** (-float(snr) / 10.0)
            for n in cfg.n_snapshots:
                threshold = analysis.resolution_threshold(
                    geom, n, center=center, power=cfg.power,
                    noise_power=noise)
                for delta_deg in deltas:
                    delta = np.deg2rad(delta_deg)
                    scenario = model.SourceScenario(
                        (center - delta / 2, center + delta / 2),
                        (cfg.power, cfg.power), noise)
                    records = run_trials(geom, scenario, n, methods,
                                         cfg.seed, combo, cfg.n_trials,
                                         grid_step, threads)
                    for method in methods:
                        ok = _successes(records, method, delta / 2)
                        p = len(ok) / cfg.n_trials
                        se = math.sqrt(p * (1.0 - p) / cfg.n_trials)
                        rows.append((geom.name, method, float(snr), int(n),
                                     float(delta_deg), cfg.n_trials, p, se,
                                     float(np.rad2deg(threshold))))
                    combo += 1
    header = ('array', 'method', 'snr_db', 'n_snapshots', 'delta_deg',
              'trials', 'p_resolve', 'p_resolve_se',
              'predicted_threshold_deg')
    return {'resolution': Table(header, tuple(rows))}


def _efficiency_doas(k):
    """Source fan for a k-source efficiency point."""
    if k == 1:
        return (0.0,)
    return tuple(np.deg2rad(np.linspace(-60.0, 60.0, k)))


def run_efficiency(cfg, threads=1):
    """CRB-to-MSE ratio across source counts and SNRs.

    Points whose CRB is undefined (rank-deficient model) are flagged
    with ``crb_defined = 0`` and excluded from the ratio.
    """
    methods = _methods(cfg.method)
    grid_step = np.deg2rad(cfg.grid_step_deg)
    rows = []
    combo = 0
    for spec in cfg.arrays:
        geom = _parse_array(spec)
        for k in cfg.k_sources:
            doas = _efficiency_doas(k)
            gate = _failure_gate(doas)
            for snr in cfg.snr_db:
                for n in cfg.n_snapshots:
                    scenario = model.SourceScenario.with_snr(doas, snr,
                                                             cfg.power)
                    mse = analysis.analytical_mse(geom, scenario, n)
                    report = analysis.crb(geom, scenario, n)
                    if report.defined:
                        kappa = analysis.efficiency_kappa(report, mse)
                        crb_trace = float(np.trace(report.crb))
                    else:
                        kappa = float('nan')
                        crb_trace = float('nan')
                    kappa_em = float('nan')
                    kappa_em_se = float('nan')
                    trials = 0
                    failed = 0
                    if cfg.empirical and report.defined:
                        records = run_trials(geom, scenario, n, methods,
                                             cfg.seed, combo, cfg.n_trials,
                                             grid_step, threads)
                        ok = _successes(records, methods[-1], gate)
                        trials = cfg.n_trials
                        failed = trials - len(ok)
                        if ok:
                            per_source = np.mean(np.square(
                                [rec.errors for rec in ok]), axis=0)
                            total = float(np.sum(per_source))
                            kappa_em = crb_trace / total
                            _, se = _mse_stats(ok)
                            # relative SE of the summed MSE carries over
                            mse_em = float(np.mean(per_source))
                            kappa_em_se = kappa_em * se / mse_em
                    rows.append((geom.name, int(k), float(snr), int(n),
                                 kappa, int(report.defined), kappa_em,
                                 kappa_em_se, trials, failed))
                    combo += 1
    header = ('array', 'k', 'snr_db', 'n_snapshots', 'kappa_analytic',
              'crb_defined', 'kappa_empirical', 'kappa_empirical_se',
              'trials', 'failed_trials')
    return {'efficiency': Table(header, tuple(rows))}


def _family_member(family, q):
    """Array for one scaling-family size, or None when not available."""
    if family == 'coprime':
        return geometry.coprime(q)
    if family == 'nested':
        return geometry.nested(q + 1, q)
    try:
        return geometry.mra(q)
    except ValueError:
        return None


def run_scaling(cfg, threads=1):
    """Closed-form MSE decay against the number of sensors.

    Each family is swept over its size parameter with one source at
    broadside (``'one'``) and with as many sources as sensors
    (``'m'``); the log-log slope is fitted per family and mode.
    """
    methods = _methods(cfg.method)
    grid_step = np.deg2rad(cfg.grid_step_deg)
    snr = cfg.snr_db[0]
    n = cfg.n_snapshots[0]
    notices = []
    rows = []
    combo = 0
    for family in cfg.families:
        for mode in cfg.k_modes:
            points = []
            for q in cfg.q_range:
                geom = _family_member(family, q)
                if geom is None:
                    notices.append(f'{family} size {q} not available; skipped')
                    continue
                m = geom.n_sensors
                mv = geometry.difference_coarray(geom).mv
                if mode == 'one':
                    doas = (0.0,)
                else:
                    doas = tuple(np.deg2rad(np.linspace(-60.0, 60.0, m)))
                scenario = model.SourceScenario.with_snr(doas, snr, cfg.power)
                eps = float(np.mean(np.diag(
                    analysis.analytical_mse(geom, scenario, n))))
                eps_em = float('nan')
                eps_se = float('nan')
                trials = 0
                failed = 0
                if cfg.empirical:
                    records = run_trials(geom, scenario, n, methods,
                                         cfg.seed, combo, cfg.n_trials,
                                         grid_step, threads)
                    ok = _successes(records, methods[-1],
                                    _failure_gate(doas))
                    trials = cfg.n_trials
                    failed = trials - len(ok)
                    eps_em, eps_se = _mse_stats(ok)
                points.append([family, mode, int(q), int(m), int(mv), eps,
                               eps_em, eps_se, trials, failed])
                combo += 1
            if len(points) >= 3:
                logs_m = np.log10([p[3] for p in points])
                logs_e = np.log10([p[5] for p in points])
                slope = float(np.polyfit(logs_m, logs_e, 1)[0])
            else:
                slope = float('nan')
            for p in points:
                rows.append(tuple(p) + (slope,))
    header = ('family', 'k_mode', 'q', 'm', 'mv', 'eps_an_rad2',
              'eps_em_rad2', 'eps_em_se_rad2', 'trials', 'failed_trials',
              'fitted_slope')
    tables = {'scaling': Table(header, tuple(rows))}
    if notices:
        tables['notices'] = Table(('message',), tuple((s,) for s in notices))
    return tables


_RUNNERS = {
    'verify_mse': run_verify_mse,
    'resolution': run_resolution,
    'efficiency': run_efficiency,
    'scaling': run_scaling,
}


def run(cfg, threads=1):
    """Dispatch a config to its experiment runner."""
    return _RUNNERS[cfg.kind](cfg, threads=threads)


def fifty_percent_crossing(x, p):
    """Abscissa where a monotone-trend probability curve crosses 0.5.

    Linear interpolation between the first bracketing pair; raises
    ``ValueError`` when the curve never crosses upward inside the grid.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.size != p.size or x.size < 2:
        raise ValueError('need matching grids of length >= 2')
    if np.any(np.diff(x) <= 0):
        raise ValueError('x grid must be strictly increasing')
    if p[0] >= 0.5:
        raise ValueError('curve already above 0.5 at the smallest x')
    for i in range(x.size - 1):
        if p[i] < 0.5 <= p[i + 1]:
            frac = (0.5 - p[i]) / (p[i + 1] - p[i])
            return float(x[i] + frac * (x[i + 1] - x[i]))
    raise ValueError('no upward 0.5 crossing inside the grid')


def _fmt_cell(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_text(path, text):
    try:
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f'failed writing {path}: {exc}') from exc
    return path


def _write_csv(path, table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([_fmt_cell(v) for v in row])
    return _write_text(path, buf.getvalue())


def _series_filter(header, row, keys):
    """Gnuplot boolean expression selecting one series' rows."""
    clauses = []
    for key in keys:
        col = header.index(key) + 1
        val = row[header.index(key)]
        if isinstance(val, str):
            clauses.append(f"strcol({col}) eq '{val}'")
        else:
            clauses.append(f'column({col}) == {_fmt_cell(val)}')
    return ' && '.join(clauses)


def _gp_series(table, csv_name, keys, xcol, ycol, logy=False, logx=False):
    """One gnuplot 'plot' command with a line per distinct key tuple."""
    header = table.header
    seen = []
    for row in table.rows:
        tag = tuple(row[header.index(k)] for k in keys)
        if tag not in seen:
            seen.append(tag)
    xi = header.index(xcol) + 1
    yi = header.index(ycol) + 1
    parts = []
    for tag in seen:
        row = next(r for r in table.rows
                   if tuple(r[header.index(k)] for k in keys) == tag)
        cond = _series_filter(header, row, keys)
        title = ' '.join(_fmt_cell(v) for v in tag)
        parts.append(f"'{csv_name}' using "
                     f'({cond} ? column({xi}) : 1/0):(column({yi})) '
                     f"with linespoints title '{title}'")
    lines = ["# requires gnuplot >= 5.0 (CSV-quoted fields)",
             "set datafile separator ','"]
    if logx and logy:
        lines.append('set logscale xy')
    elif logy:
        lines.append('set logscale y')
    elif logx:
        lines.append('set logscale x')
    lines.append(f"set xlabel '{xcol}'")
    lines.append(f"set ylabel '{ycol}'")
    lines.append('set key outside right')
    lines.append('plot \\')
    lines.append(', \\\n'.join('    ' + p for p in parts))
    return '\n'.join(lines) + '\n'


def _plot_script(name, table, csv_name):
    if name == 'verify_mse':
        return _gp_series(table, csv_name, ('array', 'method', 'n_snapshots'),
                          'snr_db', 'rel_err', logy=True)
    if name == 'resolution':
        script = _gp_series(table, csv_name, ('array', 'method'),
                            'delta_deg', 'p_resolve')
        thr_col = table.header.index('predicted_threshold_deg')
        arr_col = table.header.index('array')
        arrows = []
        seen = set()
        for row in table.rows:
            if row[arr_col] in seen:
                continue
            seen.add(row[arr_col])
            thr = _fmt_cell(row[thr_col])
            arrows.append(f'set arrow from {thr},0 to {thr},1 nohead dashtype 2')
        lines = script.split('\n')
        cut = lines.index('plot \\')
        return '\n'.join(lines[:cut] + arrows + lines[cut:])
    if name == 'efficiency':
        return _gp_series(table, csv_name, ('array', 'k'),
                          'snr_db', 'kappa_analytic')
    if name == 'scaling':
        return _gp_series(table, csv_name, ('family', 'k_mode'),
                          'm', 'eps_an_rad2', logx=True, logy=True)
    return None


def emit_outputs(tables, out_dir, cfg):
    """Write tables, plot scripts, and the run manifest.

    One CSV per table, one gnuplot script per plottable table, and
    ``manifest.json`` recording the tool version, seed, config hash,
    and table row counts. Reruns with identical (config, seed) produce
    byte-identical files.

    Returns:
        List of written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    manifest_tables = {}
    for name in sorted(tables):
        table = tables[name]
        csv_name = f'{name}.csv'
        path = os.path.join(out_dir, csv_name)
        written.append(_write_csv(path, table))
        manifest_tables[name] = {'path': csv_name, 'rows': len(table.rows)}
        script = _plot_script(name, table, csv_name)
        if script is not None:
            written.append(_write_text(os.path.join(out_dir, f'{name}.gp'),
                                       script))
    manifest = {
        'tool': 'coarray-lab',
        'version': __version__,
        'kind': cfg.kind,
        'seed': cfg.seed,
        'config_sha256': config_digest(cfg),
        'config': dataclasses.asdict(cfg),
        'tables': manifest_tables,
    }
    text = json.dumps(manifest, sort_keys=True, indent=2) + '\n'
    written.append(_write_text(os.path.join(out_dir, 'manifest.json'), text))
    return written
