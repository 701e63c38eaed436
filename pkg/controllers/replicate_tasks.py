# File: controllers/replicate_tasks.py

"""
Per-replicate statistics, one function per experiment.

Each task maps a list of samples and a plain-dict parameter block to one row
of floats per sample. Test functions are rebuilt from their library names
inside the task so that parameter blocks stay picklable.
"""

import logging
from typing import Callable, Dict, List

import numpy as np

from models.ensemble import SpectrumSample
from models.field import FieldGrid, FieldKind
from models.gmc_measure import NormalizerMode
from utils import fields, function_library, gmc, loop_equation
from utils.sampler import importance_weight

logger = logging.getLogger(__name__)


def _linear(sample: SpectrumSample, f, center: float = None) -> float:
    if center is None:
        center = sample.n * f.mean
    return float(np.sum(f.evaluate(sample.angles)) - center)


def linear_statistics(samples: List[SpectrumSample], params: dict) -> List[Dict]:
    """
    Centered linear statistics sum_j f(theta_j) - center for each configured function.

    params['functions'] is a list of {label, name, params, center}; a missing
    center means N times the mean of f.
    """
    built = [(spec['label'], function_library.periodic_function(spec['name'], spec.get('params')),
              spec.get('center')) for spec in params['functions']]
    window = params.get('window')
    rows = []
    for sample in samples:
        row = {label: _linear(sample, f, center) for label, f, center in built}
        if window is not None:
            # eigenangles inside the support of the rescaled window
            row['window_count'] = int(np.count_nonzero(np.abs(sample.centered_angles()) <= window))
        rows.append(row)
    return rows


def moments(samples: List[SpectrumSample], params: dict) -> List[Dict]:
    rows = []
    for sample in samples:
        rows.append({
            'log_abs_p0': fields.log_abs_p(sample, 1.0, 0.0),
            'psi0': fields.psi_at_zero(sample),
            'trace_sq': float(abs(np.sum(np.exp(1j * sample.angles))) ** 2),
        })
    return rows


def rigidity(samples: List[SpectrumSample], params: dict) -> List[Dict]:
    oversample = int(params.get('oversample', 2))
    rows = []
    for sample in samples:
        n = sample.n
        k = np.arange(1, n + 1)
        deviation = 2.0 * np.pi * k / n - sample.angles
        at_angles = fields.counting_function(sample, sample.angles)
        angle_gap = float(np.max(np.abs(at_angles - n / (2.0 * np.pi) * deviation)))
        # midpoints of the cyclic gaps stay off the spectrum
        gaps = np.diff(np.append(sample.angles, sample.angles[0] + 2.0 * np.pi))
        midpoints = np.mod(sample.angles + 0.5 * gaps, 2.0 * np.pi)
        psi = fields.max_psi_exact(sample)
        rows.append({
            'max_dev': float(np.max(np.abs(deviation))),
            'max_h': fields.max_abs_counting(sample),
            'max_h_at_angles': float(np.max(np.abs(at_angles))),
            'max_logp': fields.max_logp_grid(sample, oversample),
            'max_psi': psi.max,
            'angle_gap': angle_gap,
            'counting_gap': fields.counting_identity_gap(sample, midpoints),
        })
    return rows


def loop_functionals(samples: List[SpectrumSample], params: dict) -> List[Dict]:
    """W_N and W~_N at each t of the grid, the log-weight base sum_j w(theta_j) and the decomposition gap."""
    w = function_library.periodic_function(params['test_function'], params.get('params'))
    pair = loop_equation.conjugate_pair(w)
    t_grid = [float(t) for t in params['t_grid']]
    rows = []
    for sample in samples:
        sample = sample.with_log_weight(importance_weight(sample, w))
        row = {'log_weight_base': sample.log_weight, 'linear': sample.log_weight - sample.n * w.mean}
        gap = 0.0
        for t in t_grid:
            direct = loop_equation.w_functional(sample, w, t, pair)
            terms = loop_equation.w_tilde(sample, w, t, pair)
            rebuilt = loop_equation.reconstruct_w(sample, w, t, terms, pair)
            gap = max(gap, abs(direct - rebuilt) / max(1.0, abs(direct)))
            row[f"W[t={t:g}]"] = direct
            row[f"Wtilde[t={t:g}]"] = terms.total
        row['decomposition_gap'] = gap
        rows.append(row)
    return rows


def _raw_measure(sample: SpectrumSample, gamma: float, field: FieldGrid):
    """Chaos measure of one precomputed field with unit normalizer."""
    return gmc.build_measure(sample, gamma, field.r, field.kind, NormalizerMode.MONTE_CARLO,
                             normalizer_value=1.0, field=field)


def chaos_masses(samples: List[SpectrumSample], params: dict) -> List[Dict]:
    """Unnormalized log total mass (at gamma and -gamma) and log arc masses of the chaos measure."""
    gamma = float(params['gamma'])
    r = float(params['r'])
    kind = gmc.resolve_field_kind(params.get('field_kind', 'abs'))
    arcs = params.get('arcs') or []
    gammas = [float(g) for g in params.get('gammas', [])]
    rows = []
    for sample in samples:
        M = params.get('grid_size') or gmc.measure_grid_size(sample.n, r)
        field = fields.field_grid(sample, kind, r=r, M=M)
        measure = _raw_measure(sample, gamma, field)
        row = {'log_mass': measure.log_total_mass(),
               'log_mass_neg': _raw_measure(sample, -gamma, field).log_total_mass()}
        for i, arc in enumerate(arcs):
            row[f"log_arc{i}"] = measure.log_mass(arc)
        for g in gammas:
            row[f"log_mass[g={g:g}]"] = _raw_measure(sample, g, field).log_total_mass()
        rows.append(row)
    return rows


def boundary_energy(samples: List[SpectrumSample], params: dict) -> List[Dict]:
    """Per-sample free energy at each gamma and thick-point ratios on a midpoint grid at r = 1."""
    gammas = [float(g) for g in params.get('gammas', [])]
    thick = [float(g) for g in params.get('thick_gammas', [])]
    rows = []
    for sample in samples:
        boundary = gmc.boundary_field(sample, FieldKind.LOG_ABS_P, params.get('grid_size'))
        row = {}
        for g in gammas:
            row[f"F[g={g:g}]"] = float(gmc.free_energy_values([sample], g, boundaries=[boundary])[0])
        for g in thick:
            row[f"thick[g={g:g}]"] = gmc.log_thick_ratio(sample, g, field=boundary)
        rows.append(row)
    return rows


TASKS: Dict[str, Callable] = {
    'linear': linear_statistics,
    'moment': moments,
    'rigidity': rigidity,
    'loop': loop_functionals,
    'chaos': chaos_masses,
    'energy': boundary_energy,
}
