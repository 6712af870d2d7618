"""Monte Carlo sweep harness: grids, per-trial caching, aggregation, CSV output."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from time import perf_counter

import numpy as np

from .ao import (
    AoOptions,
    AoResult,
    Cluster2State,
    TrialCase,
    alternate_optimize,
    evaluate_pair,
    fixed_cluster2,
    optimize_cluster2,
)
from .channels import build_statistics, draw_realization, dump_realization, trial_rng
from .precoding import ZfDegenerateError, effective_channel, zf_precoder
from .scenario import ConfigError, SystemConfig, dbm_to_watts, validate_config
from .sinr import PowerAllocation, ScenarioKind, SinrReport

CSV_HEADER = "sweep_value,scenario,mode,mean_sum_rate_bps_hz,outage_user1,trials,skipped"
TRACE_HEADER = "sweep_value,scenario,mode,trial,stage,outer_iter,inner_iter,objective,grad_norm,step"

SWEEP_VARIABLES = ("tx_power_dbm", "ris_elements", "emi_dbm")


class Mode(str, Enum):
    FIXED = "fixed"  # zero phases, ZF at those phases
    UNAWARE = "unaware"  # optimize ignoring all interference
    AWARE = "aware"  # optimize the true scenario objective


@dataclass(frozen=True)
class ScenarioCase:
    """One evaluation scenario, with its EMI level where applicable."""

    kind: ScenarioKind
    emi_dbm: float | None = None

    @property
    def label(self) -> str:
        kind = ScenarioKind(self.kind)
        if kind.has_emi and self.emi_dbm is not None:
            return f"{kind.value}_{self.emi_dbm:g}"
        return kind.value


DEFAULT_CASES = (
    ScenarioCase(ScenarioKind.EIF),
    ScenarioCase(ScenarioKind.IRR),
    ScenarioCase(ScenarioKind.EMI, -75.0),
    ScenarioCase(ScenarioKind.EMI, -65.0),
    ScenarioCase(ScenarioKind.EMI_IRR, -75.0),
    ScenarioCase(ScenarioKind.EMI_IRR, -65.0),
)
EMI_SWEEP_CASES = (
    ScenarioCase(ScenarioKind.EMI),
    ScenarioCase(ScenarioKind.EMI_IRR),
)


def parse_scenario_token(token: str) -> ScenarioCase:
    """Parse a CLI scenario token, name[:emi_dbm], e.g. 'eif' or 'emi:-65'."""
    name, sep, level = token.strip().partition(":")
    try:
        kind = ScenarioKind(name)
    except ValueError as exc:
        known = ", ".join(k.value for k in ScenarioKind)
        raise ConfigError(f"unknown scenario '{name}' (expected one of: {known})") from exc
    if not sep:
        return ScenarioCase(kind)
    if not kind.has_emi:
        raise ConfigError(f"scenario '{name}' does not take an EMI level")
    try:
        return ScenarioCase(kind, float(level))
    except ValueError as exc:
        raise ConfigError(f"bad EMI level in scenario token '{token}'") from exc


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: a variable and grid, scenario cases, and a precoding mode."""

    variable: str
    grid: tuple[float, ...]
    scenarios: tuple[ScenarioCase, ...] = DEFAULT_CASES
    mode: Mode = Mode.FIXED
    trials: int = 500
    seed: int | None = None  # None uses the config seed
    unit_power: bool = False  # 1 W per user instead of splitting the BS budget
    keep_samples: bool = False  # retain per-trial sum rates on each record


@dataclass(frozen=True)
class MetricRecord:
    sweep_value: float
    scenario: str
    mode: str
    mean_sum_rate_bps_hz: float
    outage: tuple[float, ...]  # per user, fraction of trials below the threshold
    trials: int  # valid trials aggregated
    skipped: int
    std_sum_rate_bps_hz: float = 0.0
    wall_time_s: float = 0.0
    sum_rate_samples: tuple[float, ...] | None = None


def aggregate(trial_rates, weights, threshold: float):
    """Reduce per-trial per-user rates to (mean_sum, std_sum, outage-per-user)."""
    arr = np.atleast_2d(np.asarray(trial_rates, dtype=float))
    if arr.size == 0:
        raise ValueError("no valid trials to aggregate")
    w = np.asarray(weights, dtype=float)
    sums = arr @ w
    mean = float(sums.mean())
    std = float(sums.std(ddof=1)) if sums.size > 1 else 0.0
    outage = (arr < threshold).mean(axis=0)
    return mean, std, outage


def make_powers(cfg: SystemConfig, unit_power: bool = False) -> PowerAllocation:
    """Equal power split per cluster, or 1 W per user when unit_power is set."""
    k1 = cfg.clusters[0].num_users
    k2 = cfg.clusters[1].num_users
    if unit_power:
        return PowerAllocation(np.ones(k1), np.ones(k2))
    return PowerAllocation(
        np.full(k1, cfg.clusters[0].tx_power_w / k1),
        np.full(k2, cfg.clusters[1].tx_power_w / k2),
    )


def _case_levels(case: ScenarioCase, cfg: SystemConfig) -> tuple[float, float]:
    kind = ScenarioKind(case.kind)
    if not kind.has_emi:
        return 0.0, 0.0
    if case.emi_dbm is not None:
        level = dbm_to_watts(case.emi_dbm)
        return level, level
    if cfg.clusters[0].emi_power_dbm is None:
        raise ConfigError(
            f"scenario '{kind.value}' needs an EMI level: give one on the scenario "
            "or set emi_power_dbm in the config"
        )
    return cfg.clusters[0].emi_power_w, cfg.clusters[1].emi_power_w


class TrialEvaluator:
    """Evaluates scenario cases on one realization, reusing optimizer output.

    Within a trial the interference-unaware AO result and the neighbor
    cluster's state do not depend on the scenario case, so they are computed
    once. Aware AO runs once per (scenario, EMI level).
    """

    def __init__(self, cfg, stats, powers, trace=None, sweep_value=""):
        self.cfg = cfg
        self.stats = stats
        self.powers = powers
        self.noise = cfg.noise_power_w
        self.w1 = cfg.clusters[0].weights()
        self.w2 = cfg.clusters[1].weights()
        self.factor = cfg.emi_self_factor
        self.trace = trace
        self.sweep_value = sweep_value
        self.real = None
        self._cache = {}

    def start_trial(self, real):
        self.real = real
        self._cache = {}

    def _once(self, key, fn):
        if key not in self._cache:
            try:
                self._cache[key] = ("ok", fn())
            except ZfDegenerateError as exc:
                self._cache[key] = ("err", exc)
        status, value = self._cache[key]
        if status == "err":
            raise value
        return value

    def _trace_rcg(self, case, mode, stage, outer_iter, res):
        objectives = res.trace[1:]
        for i in range(res.iterations):
            obj = objectives[i] if i < objectives.size else res.trace[-1]
            self.trace.append(
                (
                    self.sweep_value,
                    case.label,
                    mode.value,
                    self.real.trial,
                    stage,
                    outer_iter,
                    i,
                    obj,
                    res.grad_norms[i],
                    res.steps[i],
                )
            )

    def _trace_ao(self, case, mode, stage, result: AoResult):
        if self.trace is None:
            return
        for outer_iter, res in enumerate(result.inner):
            self._trace_rcg(case, mode, stage, outer_iter, res)

    def _cluster2(self, case, mode) -> Cluster2State:
        if mode is Mode.FIXED:
            return self._once("c2_fixed", lambda: fixed_cluster2(self.real))

        def compute():
            state, result = optimize_cluster2(
                self.real, self.stats, self.powers.cluster2, self.noise, self.w2
            )
            self._trace_ao(case, mode, "cluster2", result)
            return state

        return self._once("c2_opt", compute)

    def evaluate(self, case: ScenarioCase, mode: Mode) -> SinrReport:
        kind = ScenarioKind(case.kind)
        mode = Mode(mode)
        emi1_w, emi2_w = _case_levels(case, self.cfg)
        cluster2 = self._cluster2(case, mode) if kind.has_irr else None
        tcase = TrialCase(
            real=self.real,
            stats=self.stats,
            powers=self.powers,
            noise_power_w=self.noise,
            weights1=self.w1,
            emi1_w=emi1_w,
            emi2_w=emi2_w,
            emi_self_factor=self.factor,
            cluster2=cluster2,
        )

        if mode is Mode.FIXED:
            theta = np.ones(self.real.h1.shape[0], dtype=complex)
            prec = self._once(
                "zf_fixed",
                lambda: zf_precoder(effective_channel(self.real.g1, theta, self.real.h1)),
            )
            return evaluate_pair(tcase, kind, theta, prec.u)

        if mode is Mode.UNAWARE or kind is ScenarioKind.EIF:
            stage = "cluster1_unaware"
            opts = AoOptions(scenario=ScenarioKind.EIF, awareness="unaware")
            key = "ao_unaware"
        else:
            stage = f"cluster1_aware_{kind.value}"
            opts = AoOptions(scenario=kind, awareness="aware")
            key = ("ao_aware", kind.value, emi1_w, emi2_w)

        def compute():
            result = alternate_optimize(tcase, opts)
            if self.trace is not None:
                self._trace_ao(case, mode, stage, result)
            return result

        ao = self._once(key, compute)
        return evaluate_pair(tcase, kind, ao.theta, ao.precoder.u)


def _config_at(cfg: SystemConfig, variable: str, value: float) -> SystemConfig:
    cluster1 = cfg.clusters[0]
    if variable == "tx_power_dbm":
        cluster1 = replace(cluster1, tx_power_dbm=float(value))
    elif variable == "ris_elements":
        count = int(value)
        side = math.isqrt(count)
        if count != value or side * side != count or count < 1:
            raise ConfigError(f"ris_elements grid values must be perfect squares, got {value}")
        cluster1 = replace(cluster1, ris_side=side)
    elif variable != "emi_dbm":
        raise ConfigError(f"unknown sweep variable '{variable}'")
    return validate_config(replace(cfg, clusters=(cluster1, cfg.clusters[1])))


def _case_at(variable: str, case: ScenarioCase, value: float) -> ScenarioCase:
    if variable == "emi_dbm" and ScenarioKind(case.kind).has_emi:
        return replace(case, emi_dbm=float(value))
    return case


def _validate_spec(spec: SweepSpec) -> None:
    if spec.variable not in SWEEP_VARIABLES:
        raise ConfigError(f"unknown sweep variable '{spec.variable}'")
    if len(spec.grid) == 0:
        raise ConfigError("sweep grid must not be empty")
    if len(spec.scenarios) == 0:
        raise ConfigError("at least one scenario case is required")
    if spec.trials < 1:
        raise ConfigError("trials must be >= 1")
    if spec.seed is not None and (not isinstance(spec.seed, int) or spec.seed < 0):
        raise ConfigError("seed must be a non-negative integer")
    Mode(spec.mode)


def run_sweep(cfg: SystemConfig, spec: SweepSpec, trace=None) -> list[MetricRecord]:
    """Run the sweep and return one record per (grid value, scenario case).

    All scenario cases at a grid point share each trial's channel draw, so
    scenario comparisons are paired. Results are deterministic given the
    config, the spec, and the seed; execution order is the only order used.
    """
    cfg = validate_config(cfg)
    _validate_spec(spec)
    mode = Mode(spec.mode)
    seed = cfg.rng_seed if spec.seed is None else spec.seed

    records: list[MetricRecord] = []
    for value in spec.grid:
        cfg_pt = _config_at(cfg, spec.variable, value)
        stats = build_statistics(cfg_pt)
        powers = make_powers(cfg_pt, spec.unit_power)
        cases = [_case_at(spec.variable, case, value) for case in spec.scenarios]
        weights1 = cfg_pt.clusters[0].weights()

        rates = {case: [] for case in cases}
        skips = {case: 0 for case in cases}
        times = {case: 0.0 for case in cases}
        evaluator = TrialEvaluator(cfg_pt, stats, powers, trace=trace, sweep_value=value)
        for trial in range(spec.trials):
            real = draw_realization(cfg_pt, stats, trial, rng=trial_rng(seed, trial))
            evaluator.start_trial(real)
            for case in cases:
                t0 = perf_counter()
                try:
                    report = evaluator.evaluate(case, mode)
                except ZfDegenerateError:
                    skips[case] += 1
                else:
                    rates[case].append(report.rates_bps_hz)
                finally:
                    times[case] += perf_counter() - t0

        for case in cases:
            if not rates[case]:
                raise RuntimeError(
                    f"every trial was skipped for scenario '{case.label}' at "
                    f"{spec.variable}={value}"
                )
            arr = np.array(rates[case])
            mean, std, outage = aggregate(arr, weights1, cfg_pt.rate_threshold_bps_hz)
            samples = tuple(float(s) for s in arr @ weights1) if spec.keep_samples else None
            records.append(
                MetricRecord(
                    sweep_value=float(value),
                    scenario=case.label,
                    mode=mode.value,
                    mean_sum_rate_bps_hz=mean,
                    outage=tuple(float(o) for o in outage),
                    trials=len(rates[case]),
                    skipped=skips[case],
                    std_sum_rate_bps_hz=std,
                    wall_time_s=times[case],
                    sum_rate_samples=samples,
                )
            )
    return records


def run_single_trial(
    cfg: SystemConfig,
    cases,
    mode: Mode,
    trial: int = 0,
    seed: int | None = None,
    unit_power: bool = False,
    trace=None,
    dump_dir=None,
) -> list[tuple[ScenarioCase, SinrReport]]:
    """Evaluate the given scenario cases on a single channel draw."""
    cfg = validate_config(cfg)
    stats = build_statistics(cfg)
    powers = make_powers(cfg, unit_power)
    use_seed = cfg.rng_seed if seed is None else seed
    real = draw_realization(cfg, stats, trial, rng=trial_rng(use_seed, trial))
    if dump_dir is not None:
        dump_realization(real, dump_dir)
    evaluator = TrialEvaluator(cfg, stats, powers, trace=trace, sweep_value="")
    evaluator.start_trial(real)
    return [(case, evaluator.evaluate(case, mode)) for case in cases]


def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def render_csv(records) -> str:
    """Render metric records to the canonical CSV text (byte-deterministic)."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    _fmt(r.sweep_value),
                    r.scenario,
                    r.mode,
                    _fmt(r.mean_sum_rate_bps_hz),
                    _fmt(r.outage[0]),
                    str(r.trials),
                    str(r.skipped),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(records, path) -> None:
    Path(path).write_text(render_csv(records), encoding="utf-8")


def render_trace(rows) -> str:
    lines = [TRACE_HEADER]
    for row in rows:
        sweep_value, scenario, mode, trial, stage, outer_i, inner_i, obj, gnorm, step = row
        lines.append(
            ",".join(
                [
                    _fmt(sweep_value) if sweep_value != "" else "",
                    scenario,
                    mode,
                    str(trial),
                    stage,
                    str(outer_i),
                    str(inner_i),
                    _fmt(obj),
                    _fmt(gnorm),
                    _fmt(step),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_trace(rows, path) -> None:
    Path(path).write_text(render_trace(rows), encoding="utf-8")
