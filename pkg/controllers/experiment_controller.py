# File: controllers/experiment_controller.py

import logging
import math
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, stats

from controllers.replicate_runner import ReplicateRunner
from models.ensemble import EnsembleSpec
from models.oracle import MomentKind, MomentQuery
from models.run import ExperimentConfig, RunSummary
from models.test_function import MesoScaledFn
from utils import function_library, gmc, harmonic, loop_equation, oracles, statistics
from utils.errors import ConfigError, DomainError, EssCollapseError, GmcRegimeError
from utils.rng import replicate_seed, replicate_stream
from utils.sampler import EigenSolver, sample_spectrum

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    'sigma_k': 3.0,
    'ks_pvalue': 0.01,
    'ess_floor': 0.1,
    'decomposition_rel': 1e-8,
    'identity_abs': 1e-10,
    'centering_rel': 1e-6,
    'meso_rel': 0.05,
    'sine_rel': 0.10,
    'free_energy_abs': 0.15,
    'kink_ratio': 0.25,
    'convexity_abs': 1e-9,
    'thick_abs': 0.35,
    'trend_slack': 0.02,
    'tail_alpha': 0.01,
    'continuity_factor': 10.0,
}
R6_EPSILONS = (1.0, 0.5, 0.25)
CENTERING_POINTS = 512
DEFAULT_T_GRID = (0.0, 0.5, 1.0)


class ExperimentController:
    """
    Drives the Monte Carlo experiments.

    Every driver returns a RunSummary whose checks list holds the acceptance
    assertions; the per-replicate statistics of the last run are kept in
    ``self.raw`` for the CSV writer.
    """

    def __init__(self, runner: ReplicateRunner = None):
        self.runner = runner or ReplicateRunner(workers=1)
        self.raw = pd.DataFrame()

    def run(self, subcommand: str, cfg: ExperimentConfig) -> RunSummary:
        drivers = {
            'clt': self.run_global_clt,
            'meso': self.run_meso_clt,
            'sine': self.run_sine_clt,
            'rigidity': self.run_rigidity,
            'loopeq': self.run_loop_null,
            'gmc': self.run_gmc,
            'errbudget': self.run_error_budget,
        }
        started = time.perf_counter()
        logger.info(f"Starting {subcommand} run '{cfg.name}' (config {cfg.config_hash()[:12]}, "
                    f"seed {cfg.master_seed}, {self.runner.workers} workers)")
        betas = cfg.betas()
        try:
            if len(betas) > 1:
                summary = self._run_beta_sweep(drivers[subcommand], cfg, betas)
            else:
                summary = drivers[subcommand](cfg.for_beta(betas[0]))
        except Exception as e:
            logger.error(f"Experiment '{cfg.name}' failed: {str(e)}")
            raise
        duration = time.perf_counter() - started
        summary.provenance.update({
            'config_hash': cfg.config_hash(),
            'master_seed': cfg.master_seed,
            'workers': self.runner.workers,
            'duration_s': duration,
        })
        logger.info(f"Finished '{cfg.name}' in {duration:.1f}s: estimate {summary.estimate:.6g} "
                    f"+/- {summary.std_error:.3g}, {'passed' if summary.passed else 'FAILED'}")
        return summary

    def _run_beta_sweep(self, driver, cfg: ExperimentConfig, betas: List[float]) -> RunSummary:
        """One driver run per beta; check names gain a beta tag and raw frames are stacked."""
        frames, checks, per_beta = [], [], {}
        summary = None
        for beta in betas:
            logger.info(f"'{cfg.name}': beta={beta:g}")
            summary = driver(cfg.for_beta(beta))
            frames.append(self.raw)
            checks.extend(dict(c, name=f"{c['name']}[beta={beta:g}]") for c in summary.checks)
            per_beta[f"{beta:g}"] = summary.auxiliary
        self.raw = pd.concat(frames, ignore_index=True)
        summary.checks = checks
        summary.auxiliary = {'betas': list(betas), 'per_beta': per_beta}
        return summary

    # helpers

    @staticmethod
    def _tol(cfg: ExperimentConfig, key: str) -> float:
        return float(cfg.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def _replicates(self, task: str, cfg: ExperimentConfig, n: int, params: dict) -> pd.DataFrame:
        frame = self.runner.run(task, cfg.beta, n, cfg.replicates, cfg.master_seed, params, cfg.solver)
        frame.insert(0, 'n', n)
        frame.insert(0, 'beta', cfg.beta)
        return frame

    @staticmethod
    def _finish(summary: RunSummary, checks: List[Dict], auxiliary: dict) -> RunSummary:
        summary.checks = checks
        summary.auxiliary.update(auxiliary)
        return summary

    @staticmethod
    def summarize(values, reference=None) -> RunSummary:
        return statistics.summarize(values, reference)

    # global CLT

    def run_global_clt(self, cfg: ExperimentConfig) -> RunSummary:
        """
        Linear statistic sum_j w(theta_j) - N w_hat_0 against the Gaussian limit.

        With ``statistic.kind = 'moment'`` runs the finite-N moment comparison instead.
        """
        stat = cfg.statistic
        if stat.get('kind') == 'moment':
            return self._run_moments(cfg)
        name = stat.get('test_function', 'cos')
        params = stat.get('params', {})
        w = function_library.periodic_function(name, params)
        sigma2 = harmonic.sigma_sq(w)
        prediction = oracles.clt_prediction(sigma2, cfg.beta)
        k = self._tol(cfg, 'sigma_k')
        frames, checks, per_n = [], [], {}
        summary = None
        for n in cfg.n_list:
            raw = self._replicates('linear', cfg, n, {'functions': [{'label': 'stat', 'name': name, 'params': params}]})
            frames.append(raw)
            values = raw['stat'].to_numpy()
            reference = stats.norm(0.0, math.sqrt(prediction.variance)) if prediction.variance > 0 else None
            summary = statistics.summarize(values, reference)
            var = statistics.variance_estimate(values)
            laplace = statistics.log_laplace_estimate(values, 1.0)
            summary.check(f"variance[n={n}]", statistics.within_sigma(var.variance, prediction.variance, var.std_error, k),
                          estimate=var.variance, target=prediction.variance, std_error=var.std_error)
            summary.check(f"log_laplace[n={n}]",
                          statistics.within_sigma(laplace.variance, prediction.log_laplace, laplace.std_error, k),
                          estimate=laplace.variance, target=prediction.log_laplace, std_error=laplace.std_error)
            if summary.ks_pvalue is not None:
                summary.check(f"ks[n={n}]", summary.ks_pvalue > self._tol(cfg, 'ks_pvalue'), pvalue=summary.ks_pvalue)
            checks.extend(summary.checks)
            per_n[str(n)] = {'variance': var.variance, 'variance_se': var.std_error,
                             'log_laplace': laplace.variance, 'log_laplace_se': laplace.std_error,
                             'ks_pvalue': summary.ks_pvalue}
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {
            'test_function': w.name, 'sigma_sq': sigma2,
            'predicted_variance': prediction.variance, 'predicted_log_laplace': prediction.log_laplace,
            'per_n': per_n,
        })

    def _run_moments(self, cfg: ExperimentConfig) -> RunSummary:
        """Monte Carlo E|P_N(1)|^gamma, E exp(gamma Psi_N(0)) and E|tr U|^2 against the exact oracles."""
        gammas = [float(g) for g in cfg.statistic.get('gammas', [cfg.statistic.get('gamma', 2.0)])]
        k = self._tol(cfg, 'sigma_k')
        frames, checks, per_n = [], [], {}
        summary = None
        for n in cfg.n_list:
            raw = self._replicates('moment', cfg, n, {})
            frames.append(raw)
            rows = {}
            for gamma in gammas:
                for kind, column in ((MomentKind.ABS_CHARPOLY, 'log_abs_p0'), (MomentKind.EXP_PSI, 'psi0')):
                    if kind == MomentKind.ABS_CHARPOLY and gamma <= -1.0:
                        continue
                    target = math.exp(oracles.log_moment(MomentQuery(cfg.beta, n, gamma, kind)))
                    values = np.exp(gamma * raw[column].to_numpy())
                    summary = statistics.summarize(values)
                    label = f"{kind.value}[n={n},gamma={gamma:g}]"
                    checks.append({'name': label, 'passed': bool(statistics.within_sigma(
                        summary.estimate, target, summary.std_error, k)),
                        'estimate': summary.estimate, 'target': target, 'std_error': summary.std_error})
                    rows[label] = {'estimate': summary.estimate, 'std_error': summary.std_error, 'oracle': target}
            trace = statistics.summarize(raw['trace_sq'].to_numpy())
            target = oracles.trace_second_moment(cfg.beta, n)
            checks.append({'name': f"trace_second_moment[n={n}]",
                           'passed': bool(statistics.within_sigma(trace.estimate, target, trace.std_error, k)),
                           'estimate': trace.estimate, 'target': target, 'std_error': trace.std_error})
            rows[f"trace_second_moment[n={n}]"] = {'estimate': trace.estimate, 'std_error': trace.std_error,
                                                   'oracle': target}
            per_n[str(n)] = rows
        for c in checks:
            if not c['passed']:
                logger.warning(f"Acceptance check '{c['name']}' failed: {c}")
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'gammas': gammas, 'per_n': per_n})

    # mesoscopic and Sine_beta CLTs

    def _scales(self, cfg: ExperimentConfig, n: int) -> Tuple[List[float], Optional[float]]:
        """Scales for one N: the power-rule scale (if any) first, then the listed scales."""
        stat = cfg.statistic
        scales = [function_library.meso_scale('fixed', n, scale=s) for s in stat.get('scales') or []]
        power_scale = None
        if stat.get('scale_rule', 'power') == 'power':
            power_scale = function_library.meso_scale('power', n, float(stat.get('scale_exponent', 0.5)))
            scales = [power_scale] + [L for L in scales if L != power_scale]
        return scales, power_scale

    def run_meso_clt(self, cfg: ExperimentConfig) -> RunSummary:
        """
        Statistic sum_j w(L theta_j) - N mean(w_L) for each scale L.

        Variance references: (2/beta) sigma^2(w_L) at every scale and the limit
        (2/beta) ||w||^2_{H^1/2} at the power-rule scale. Over several scales the
        empirical gap to the limit must shrink as L grows, within the combined
        standard errors.
        """
        stat = cfg.statistic
        name = stat.get('test_function', 'bump3')
        params = stat.get('params', {})
        base = function_library.compact_function(name, params)
        h_norm = harmonic.h_half_norm(base)
        limit = 2.0 / cfg.beta * h_norm
        k = self._tol(cfg, 'sigma_k')
        frames, checks, per_n = [], [], {}
        summary = None
        for n in cfg.n_list:
            scales, power_scale = self._scales(cfg, n)
            if not scales:
                raise ConfigError("meso experiment needs scale_rule 'power' or a list of scales")
            functions = [{'label': f"L={L:g}", 'name': name, 'params': {**params, 'scale': L}} for L in scales]
            raw = self._replicates('linear', cfg, n, {'functions': functions})
            frames.append(raw)
            rows, gaps = {}, []
            for L, spec in zip(scales, functions):
                values = raw[spec['label']].to_numpy()
                sigma2_l = harmonic.sigma_sq(harmonic.meso_wrap(MesoScaledFn(base, L)))
                finite = 2.0 / cfg.beta * sigma2_l
                summary = statistics.summarize(values, stats.norm(0.0, math.sqrt(finite)))
                var = statistics.variance_estimate(values)
                summary.check(f"variance_finite_L[n={n},L={L:g}]",
                              statistics.within_sigma(var.variance, finite, var.std_error, k),
                              estimate=var.variance, target=finite, std_error=var.std_error)
                if L == power_scale:
                    summary.check(f"variance_limit[n={n},L={L:g}]",
                                  abs(var.variance - limit) <= self._tol(cfg, 'meso_rel') * limit + k * var.std_error,
                                  estimate=var.variance, target=limit, std_error=var.std_error)
                checks.extend(summary.checks)
                gaps.append((L, abs(var.variance - limit), var.std_error))
                rows[spec['label']] = {
                    'L': L, 'a': math.log(L) / math.log(n) if n > 1 else 0.0,
                    'variance': var.variance, 'variance_se': var.std_error,
                    'sigma_sq_L': sigma2_l, 'empirical_error': abs(var.variance - limit),
                    'sigma_gap': abs(sigma2_l - h_norm),
                }
            if len(gaps) > 1:
                gaps.sort()
                gap = np.array([g for _, g, _ in gaps])
                se = np.array([s for _, _, s in gaps])
                slack = k * np.sqrt(se[1:] ** 2 + se[:-1] ** 2)
                checks.append({'name': f"variance_gap_monotone[n={n}]",
                               'passed': bool(np.all(np.diff(gap) <= slack)),
                               'scales': [L for L, _, _ in gaps], 'gaps': gap.tolist(), 'slack': slack.tolist()})
            per_n[str(n)] = rows
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'test_function': base.name, 'h_half_norm': h_norm,
                                              'limit_variance': limit, 'per_n': per_n})

    def run_sine_clt(self, cfg: ExperimentConfig) -> RunSummary:
        """
        Sine_beta window statistic sum_k w(N theta_k / 2 pi nu) - nu int w dx, theta_k in (-pi, pi].
        """
        stat = cfg.statistic
        name = stat.get('test_function', 'bump3')
        params = stat.get('params', {'support': 0.5})
        base = function_library.compact_function(name, params)
        nus = stat.get('nu', 1.0)
        nus = [float(v) for v in (nus if isinstance(nus, list) else [nus])]
        h_norm = harmonic.h_half_norm(base)
        limit = 2.0 / cfg.beta * h_norm
        S = base.support_half_width
        breaks = sorted({b for b in base.breakpoints if -S < b < S})
        integral, _ = integrate.quad(lambda x: float(base.evaluate(x)), -S, S, points=breaks or None, limit=400,
                                     epsabs=1e-14, epsrel=1e-12)
        k = self._tol(cfg, 'sigma_k')
        frames, checks, per_n = [], [], {}
        summary = None
        for n in cfg.n_list:
            for nu in nus:
                if nu > n ** 0.25:
                    logger.warning(f"nu={nu:g} exceeds N^(1/4)={n ** 0.25:.3g}; outside the coupling window")
                L = n / (2.0 * np.pi * nu)
                # grid points across the support of the wrapped window
                M = max(harmonic.meso_grid_size(L), 1 << int(math.ceil(math.log2(CENTERING_POINTS * np.pi * L / S))))
                wrapped = harmonic.meso_wrap(MesoScaledFn(base, L), M)
                center = nu * integral
                grid_center = n * wrapped.mean
                label = f"nu={nu:g}"
                raw = self._replicates('linear', cfg, n, {
                    'functions': [{'label': label, 'name': name, 'params': {**params, 'scale': L}, 'center': center}],
                    'window': S / L,
                })
                raw.insert(2, 'nu', nu)
                frames.append(raw)
                values = raw[label].to_numpy()
                summary = statistics.summarize(values, stats.norm(0.0, math.sqrt(limit)))
                var = statistics.variance_estimate(values)
                summary.check(f"centering[n={n},nu={nu:g}]",
                              abs(grid_center - center) <= self._tol(cfg, 'centering_rel') * max(1.0, abs(center)),
                              grid=grid_center, exact=center)
                summary.check(f"variance[n={n},nu={nu:g}]",
                              abs(var.variance - limit) <= self._tol(cfg, 'sine_rel') * limit + k * var.std_error,
                              estimate=var.variance, target=limit, std_error=var.std_error)
                checks.extend(summary.checks)
                per_n[f"{n}/{label}"] = {'L': L, 'variance': var.variance, 'variance_se': var.std_error,
                                         'mean_window_count': float(raw['window_count'].mean()),
                                         'center': center}
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'test_function': base.name, 'h_half_norm': h_norm,
                                              'limit_variance': limit, 'per_n': per_n})

    # rigidity and extremes

    def run_rigidity(self, cfg: ExperimentConfig) -> RunSummary:
        """
        Rigidity max_k |theta_k - 2 pi k / N|, counting-function maxima with the tail bound,
        and the log|P_N| / Psi_N maxima trends over n_list.
        """
        stat = cfg.statistic
        delta = float(stat.get('delta', 0.5))
        t_grid = [float(t) for t in stat.get('t_grid', [2.0, 3.0, 4.0, 5.0, 6.0])]
        scale = math.sqrt(2.0 / cfg.beta)
        alpha = self._tol(cfg, 'tail_alpha')
        z = float(stats.norm.ppf(1.0 - alpha / max(1, len(t_grid))))
        frames, checks, per_n = [], [], {}
        trends = {'rigidity': [], 'max_logp': [], 'max_psi': []}
        summary = None
        for n in cfg.n_list:
            raw = self._replicates('rigidity', cfg, n, {'oversample': stat.get('oversample', 2)})
            frames.append(raw)
            log_n = math.log(n) if n > 1 else 1.0
            normalized = n * raw['max_dev'].to_numpy() / (scale * log_n)
            summary = statistics.summarize(normalized)
            lo, hi = oracles.rigidity_band(cfg.beta, n, delta) if n > 1 else (0.0, math.inf)
            inside = float(np.mean((raw['max_dev'] >= lo) & (raw['max_dev'] <= hi)))
            summary.check(f"counting_identity[n={n}]",
                          float(raw['counting_gap'].max()) < self._tol(cfg, 'identity_abs'),
                          max_gap=float(raw['counting_gap'].max()))
            summary.check(f"angle_identity[n={n}]",
                          float(raw['angle_gap'].max()) < self._tol(cfg, 'identity_abs'),
                          max_gap=float(raw['angle_gap'].max()))
            excess = (raw['max_h'] - raw['max_h_at_angles']).to_numpy()
            summary.check(f"sup_vs_angles[n={n}]", bool(np.all(excess >= -1e-9) and np.all(excess <= 1.0 + 1e-9)),
                          min_excess=float(excess.min()), max_excess=float(excess.max()))
            tail = {}
            if n >= 2:
                for t in t_grid:
                    bound = oracles.maxh_tail_bound(cfg.beta, n, t)
                    empirical = float(np.mean(raw['max_h'].to_numpy() >= t))
                    slack = z * math.sqrt(bound * (1.0 - bound) / len(raw))
                    tail[f"{t:g}"] = {'empirical': empirical, 'bound': bound}
                    summary.check(f"tail_bound[n={n},t={t:g}]", empirical <= bound + slack,
                                  empirical=empirical, bound=bound, slack=slack)
            checks.extend(summary.checks)
            medians = {
                'rigidity': float(np.median(normalized)),
                'max_logp': float(np.median(raw['max_logp'])) / log_n,
                'max_psi': float(np.median(raw['max_psi'])) / log_n,
            }
            for key, value in medians.items():
                trends[key].append(value)
            per_n[str(n)] = {'band': [lo, hi], 'fraction_in_band': inside, 'medians': medians, 'tail': tail}
        targets = {'rigidity': 2.0, 'max_logp': scale, 'max_psi': scale}
        if len(cfg.n_list) > 1:
            order = np.argsort(cfg.n_list)
            slack = self._tol(cfg, 'trend_slack')
            for key, values in trends.items():
                distance = np.abs(np.asarray(values)[order] - targets[key])
                checks.append({'name': f"trend_{key}", 'passed': bool(np.all(np.diff(distance) <= slack)),
                               'medians': np.asarray(values)[order].tolist(), 'target': targets[key]})
        for c in checks:
            if not c['passed']:
                logger.warning(f"Acceptance check '{c['name']}' failed")
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'delta': delta, 'targets': targets, 'per_n': per_n})

    # loop equation

    def _tilted_means(self, cfg: ExperimentConfig, raw: pd.DataFrame, column: str, t_grid, checks: list,
                      label: str) -> Dict[float, statistics.Reweighted]:
        floor = self._tol(cfg, 'ess_floor')
        out = {}
        for t in t_grid:
            log_weights = t * raw['log_weight_base'].to_numpy()
            values = raw[f"{column}[t={t:g}]"].to_numpy()
            try:
                out[t] = statistics.reweighted_mean(values, log_weights, min_ess_fraction=floor)
            except EssCollapseError as e:
                logger.warning(f"{label}, t={t:g}: {str(e)}")
                out[t] = statistics.reweighted_mean(values, log_weights)
                checks.append({'name': f"ess[{label},t={t:g}]", 'passed': False, 'ess': out[t].ess})
        return out

    def run_loop_null(self, cfg: ExperimentConfig) -> RunSummary:
        """Self-normalized importance-sampling estimate of E_{N,tw}[W_N] at each t; every CI should cover 0."""
        stat = cfg.statistic
        name = stat.get('test_function', 'cos')
        params = stat.get('params', {})
        t_grid = [float(t) for t in stat.get('t_grid', DEFAULT_T_GRID)]
        k = self._tol(cfg, 'sigma_k')
        frames, checks, per_n = [], [], {}
        summary = None
        for n in cfg.n_list:
            raw = self._replicates('loop', cfg, n, {'test_function': name, 'params': params, 't_grid': t_grid})
            frames.append(raw)
            means = self._tilted_means(cfg, raw, 'W', t_grid, checks, f"n={n}")
            rows = {}
            for t, est in means.items():
                checks.append({'name': f"loop_null[n={n},t={t:g}]",
                               'passed': bool(statistics.within_sigma(est.estimate, 0.0, est.std_error, k)),
                               'estimate': est.estimate, 'std_error': est.std_error, 'ess': est.ess})
                rows[f"{t:g}"] = {'estimate': est.estimate, 'std_error': est.std_error, 'ess': est.ess,
                                  'scaled': est.estimate / n}
            gap = float(raw['decomposition_gap'].max())
            checks.append({'name': f"decomposition[n={n}]", 'passed': gap < self._tol(cfg, 'decomposition_rel'),
                           'max_gap': gap})
            per_n[str(n)] = rows
            last = means[t_grid[-1]]
            summary = RunSummary(estimate=last.estimate, std_error=last.std_error, replicates=len(raw), n_eff=last.ess)
        for c in checks:
            if not c['passed']:
                logger.warning(f"Acceptance check '{c['name']}' failed")
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'t_grid': t_grid, 'per_n': per_n})

    def run_error_budget(self, cfg: ExperimentConfig) -> RunSummary:
        """
        delta_hat, R0, R1, R2 and the bound (R0 log N + R1 + R2 N^-5) log N / N per (beta, N, w),
        with the one-sided R0 bounds for each test function.
        """
        stat = cfg.statistic
        specs = stat.get('test_functions') or [{'name': stat.get('test_function', 'cos'),
                                                'params': stat.get('params', {})}]
        t_grid = [float(t) for t in stat.get('t_grid', DEFAULT_T_GRID)]
        frames, checks, report = [], [], []
        summary = None
        for spec in specs:
            name, params = spec['name'], spec.get('params', {})
            w = function_library.periodic_function(name, params)
            R = loop_equation.r_functionals(w)
            for eps in R6_EPSILONS:
                bound = loop_equation.r6_bound(w, eps)
                checks.append({'name': f"r6_bound[{w.name},eps={eps:g}]", 'passed': R.R0 <= bound,
                               'R0': R.R0, 'bound': bound})
            if name in function_library.LINE_FUNCTIONS and 'scale' in params:
                L = float(params['scale'])
                bound = loop_equation.r8_bound(function_library.compact_function(name, params), L)
                checks.append({'name': f"r8_bound[{w.name}]", 'passed': R.R0 <= bound, 'R0': R.R0, 'bound': bound})
            sigma2 = harmonic.sigma_sq(w)
            for n in cfg.n_list:
                raw = self._replicates('loop', cfg, n, {'test_function': name, 'params': params, 't_grid': t_grid})
                raw.insert(2, 'test_function', w.name)
                frames.append(raw)
                means = self._tilted_means(cfg, raw, 'Wtilde', t_grid, checks, f"{w.name},n={n}")
                d_hat = loop_equation.delta_hat(cfg.beta, n, [m.estimate for m in means.values()])
                laplace = statistics.log_laplace_estimate(raw['linear'].to_numpy(), 1.0)
                entry = {
                    'beta': cfg.beta, 'n': n, 'test_function': w.name,
                    'delta_hat': d_hat, 'R0': R.R0, 'R1': R.R1, 'R2': R.R2,
                    'bound_rhs': loop_equation.error_budget_rhs(R, n) if n > 1 else math.inf,
                    'clt_error': abs(laplace.variance - sigma2 / cfg.beta), 'clt_error_se': laplace.std_error,
                }
                report.append(entry)
                summary = RunSummary(estimate=d_hat, std_error=laplace.std_error, replicates=len(raw),
                                     n_eff=float(min(m.ess for m in means.values())))
        for c in checks:
            if not c['passed']:
                logger.warning(f"Acceptance check '{c['name']}' failed")
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'t_grid': t_grid, 'report': report})

    # multiplicative chaos

    def _radii(self, cfg: ExperimentConfig, n: int) -> List[float]:
        stat = cfg.statistic
        if stat.get('r_presets'):
            return [float(r) for r in stat['r_presets']]
        if 'r' in stat:
            return [float(stat['r'])]
        return [gmc.default_radius(n, float(stat.get('r_delta', 2.0)))]

    def run_gmc(self, cfg: ExperimentConfig) -> RunSummary:
        """
        Normalizers, total mass, second arc moments, gamma-continuity, the free energy curve and
        thick points.

        The monte_carlo normalizer is estimated on the first half of the replicates
        and every mass statistic is evaluated on the held-out second half.
        """
        stat = cfg.statistic
        gamma = float(stat.get('gamma', 0.5))
        field_kind = stat.get('field_kind', 'abs')
        mode = stat.get('normalizer_mode', 'monte_carlo')
        arcs = stat.get('arcs') or [[0.0, 0.5], [math.pi, math.pi + 0.5]]
        gammas = [float(g) for g in stat.get('gammas', [])]
        thick = stat.get('thick_gamma', [])
        thick = [float(g) for g in (thick if isinstance(thick, list) else [thick])]
        k = self._tol(cfg, 'sigma_k')
        critical = oracles.critical_gamma(cfg.beta)
        frames, checks, per_n = [], [], {}
        summary = None
        for n in cfg.n_list:
            rows = {}
            ratios = []
            for r in self._radii(cfg, n):
                raw = self._replicates('chaos', cfg, n, {
                    'gamma': gamma, 'r': r, 'field_kind': field_kind, 'arcs': arcs, 'gammas': gammas,
                    'grid_size': stat.get('grid_size'),
                })
                raw.insert(2, 'r', r)
                frames.append(raw)
                half = len(raw) // 2
                fit, held = raw.iloc[:half], raw.iloc[half:]
                log_mc = gmc.log_normalizer(fit['log_mass'])
                asymptotic = gmc.asymptotic_normalizer(gamma, r, cfg.beta)
                ratios.append(math.exp(log_mc) / asymptotic)
                log_c = log_mc if mode == 'monte_carlo' else math.log(asymptotic)
                masses = np.exp(held['log_mass'].to_numpy() - log_c)
                summary = statistics.summarize(masses)
                label = f"n={n},r={r:g}"
                if mode == 'monte_carlo':
                    summary.check(f"mass_mean[{label}]", statistics.within_sigma(summary.estimate, 1.0, summary.std_error, k),
                                  estimate=summary.estimate, std_error=summary.std_error)
                entry = {'gamma': gamma, 'r': r, 'mass_mean': summary.estimate,
                         'mass_var': float(np.var(masses, ddof=1)), 'normalizer_mc': math.exp(log_mc),
                         'normalizer_asymptotic': asymptotic, 'normalizer_ratio': ratios[-1]}
                if len(arcs) >= 2:
                    product = np.exp(held['log_arc0'].to_numpy() + held['log_arc1'].to_numpy() - 2.0 * log_c)
                    emp = statistics.summarize(product)
                    entry['second_moment_emp'] = emp.estimate
                    entry['second_moment_se'] = emp.std_error
                    try:
                        pred = gmc.mass_second_moment(gamma, r, cfg.beta, arcs[:2])
                        entry['second_moment_pred'] = pred
                        summary.check(f"second_moment[{label}]",
                                      statistics.within_sigma(emp.estimate, pred, emp.std_error, k),
                                      estimate=emp.estimate, target=pred, std_error=emp.std_error)
                    except GmcRegimeError as e:
                        logger.warning(f"{label}: {str(e)}")
                        entry['second_moment_pred'] = None
                if gmc.resolve_field_kind(field_kind).value == 'Psi' and gamma != 0.0:
                    result = stats.ks_2samp(np.exp(raw['log_mass']), np.exp(raw['log_mass_neg']))
                    entry['symmetry_ks_pvalue'] = float(result.pvalue)
                    summary.check(f"psi_symmetry[{label}]", result.pvalue > self._tol(cfg, 'ks_pvalue'),
                                  pvalue=float(result.pvalue))
                if gammas:
                    checks.extend(self._gamma_grid_checks(cfg, raw, gammas, r, critical, label, entry))
                checks.extend(summary.checks)
                rows[f"r={r:g}"] = entry
            uniform = self._uniform_check(cfg, n, self._radii(cfg, n)[0], field_kind)
            checks.append({'name': f"gamma_zero_uniform[n={n}]", 'passed': uniform})
            rows['normalizer_R'] = float(max(max(q, 1.0 / q) for q in ratios))
            if gammas or thick:
                rows['boundary'] = self._boundary_energy(cfg, n, [g for g in gammas if g >= 0.0], thick, critical, checks, frames)
            per_n[str(n)] = rows
        for c in checks:
            if not c['passed']:
                logger.warning(f"Acceptance check '{c['name']}' failed")
        self.raw = pd.concat(frames, ignore_index=True)
        return self._finish(summary, checks, {'gamma': gamma, 'field_kind': str(field_kind),
                                              'normalizer_mode': mode, 'arcs': arcs, 'per_n': per_n})

    def _uniform_check(self, cfg: ExperimentConfig, n: int, r: float, field_kind) -> bool:
        spec = EnsembleSpec(beta=cfg.beta, n=n, seed=replicate_seed(cfg.master_seed, 0))
        sample = sample_spectrum(spec, replicate_stream(cfg.master_seed, 0), EigenSolver(cfg.solver))
        measure = gmc.build_measure(sample, 0.0, r, field_kind)
        return bool(np.all(measure.weights == 1.0) and abs(measure.total_mass() - 1.0) < 1e-15)

    def _gamma_grid_checks(self, cfg, raw, gammas, r, critical, label, entry) -> List[Dict]:
        checks = []
        first = raw.iloc[0]
        masses = np.array([math.exp(first[f"log_mass[g={g:g}]"]) / gmc.asymptotic_normalizer(g, r, cfg.beta)
                           for g in gammas])
        steps = np.abs(np.diff(masses))
        factor = self._tol(cfg, 'continuity_factor')
        jumps = []
        for i in range(len(steps)):
            neighbours = [steps[j] for j in (i - 1, i + 1) if 0 <= j < len(steps)]
            if neighbours and steps[i] > factor * max(neighbours):
                jumps.append(i)
        checks.append({'name': f"gamma_continuity[{label}]", 'passed': not jumps, 'jumps': jumps})
        medians = {}
        for g in gammas:
            normalized = np.exp(raw[f"log_mass[g={g:g}]"].to_numpy()) / gmc.asymptotic_normalizer(g, r, cfg.beta)
            medians[f"{g:g}"] = float(np.median(normalized))
        entry['median_mass'] = medians
        sub = [g for g in gammas if abs(g) < critical]
        sup = [g for g in gammas if abs(g) > critical]
        if sub and sup:
            low, high = medians[f"{min(sub, key=abs):g}"], medians[f"{max(sup, key=abs):g}"]
            checks.append({'name': f"supercritical_collapse[{label}]", 'passed': high < low,
                           'subcritical_median': low, 'supercritical_median': high})
        return checks

    def _boundary_energy(self, cfg, n, gammas, thick, critical, checks, frames) -> dict:
        raw = self._replicates('energy', cfg, n, {'gammas': gammas, 'thick_gammas': thick,
                                                  'grid_size': cfg.statistic.get('grid_size')})
        frames.append(raw)
        out = {}
        if gammas:
            g = np.asarray(gammas)
            curve = np.array([raw[f"F[g={v:g}]"].mean() for v in gammas])
            oracle = np.array([oracles.free_energy_prediction(cfg.beta, abs(v)) for v in gammas])
            gap = float(np.max(np.abs(curve - oracle)))
            checks.append({'name': f"free_energy[n={n}]", 'passed': gap <= self._tol(cfg, 'free_energy_abs'),
                           'max_gap': gap})
            if len(g) >= 3:
                slopes = np.diff(curve) / np.diff(g)
                second = np.diff(slopes) / ((g[2:] - g[:-2]) / 2.0)
                checks.append({'name': f"free_energy_convex[n={n}]",
                               'passed': bool(np.all(second >= -self._tol(cfg, 'convexity_abs'))),
                               'min_second_difference': float(second.min())})
            try:
                left, right = gmc.secant_slopes(g, curve, critical)
                ratio = abs(right - left) / max(abs(left), 1e-300)
                checks.append({'name': f"free_energy_kink[n={n}]", 'passed': ratio > self._tol(cfg, 'kink_ratio'),
                               'left_slope': left, 'right_slope': right})
            except DomainError as e:
                logger.info(f"Kink check skipped: {str(e)}")
            out['free_energy'] = {'gammas': gammas, 'empirical': curve.tolist(), 'oracle': oracle.tolist()}
        if thick:
            medians = {}
            for g in thick:
                values = raw[f"thick[g={g:g}]"].to_numpy()
                medians[f"{g:g}"] = float(np.median(values))
                target = -g * g / (2.0 * cfg.beta)
                checks.append({'name': f"thick_points[n={n},gamma={g:g}]",
                               'passed': abs(medians[f"{g:g}"] - target) <= self._tol(cfg, 'thick_abs'),
                               'median': medians[f"{g:g}"], 'target': target})
            if len(thick) > 1:
                ordered = np.array([raw[f"thick[g={g:g}]"].to_numpy() for g in sorted(thick)])
                checks.append({'name': f"thick_monotone[n={n}]",
                               'passed': bool(np.all(ordered[1:] <= ordered[:-1]))})
            out['thick_points'] = medians
        return out
