"""Channel-by-channel experiment orchestration.

Timeline: channel ``i`` is measured at the end of interval
``i * intervals_per_channel``. The birefringence walk is shared by all
channels (one walk per fiber arm), and the most recent realignment before a
measurement happened at the last multiple of ``realign_every`` strictly
before it, so at least one interval of drift is always left uncorrected.

Random streams: per-arm drift from ``(link.seed, arm)``, per-channel shot
noise from ``(run.seed, channel index)``. Serial and parallel sweeps
therefore draw identical numbers.
"""
from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .channel_grid import ChannelPair, build_plan
from .compensate import CompensationPlan, LinkState, PlanEntry, compensate_channel, drift_realign, fit_entry
from .config import RunConfig
from .link import ARMS, apply_link, arm_rng, drift_path, rotation_angle
from .measure import CountRecord, accidental_estimate, run_tomography
from .qstate import KETS, PHI_PLUS, fidelity_pure
from .source import emit_state, pair_rate
from .tomo import MleOptions, ReconstructionResult, reconstruct, report_metrics


def measurement_interval(index: int, cfg: RunConfig) -> int:
    return index * cfg.schedule.intervals_per_channel


def last_realignment(t: int, every: int) -> int:
    if every <= 0:
        return 0
    return ((t - 1) // every) * every


def drift_paths(cfg: RunConfig, n_intervals: int) -> tuple[np.ndarray, np.ndarray]:
    return tuple(drift_path(n_intervals, cfg.link, arm_rng(cfg.link.seed, arm)) for arm in ARMS)


def residual_drift(cfg: RunConfig, index: int, paths) -> tuple[np.ndarray, np.ndarray]:
    t = measurement_interval(index, cfg)
    r = last_realignment(t, cfg.schedule.realign_every)
    state = LinkState(drift=(paths[0][r], paths[1][r]), interval=r)
    drift_realign(state, KETS[cfg.schedule.monitor_polarization])
    state.drift = (paths[0][t], paths[1][t])
    state.interval = t
    return state.residual()


def channel_rng(cfg: RunConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([int(cfg.run.seed), int(index)])


def simulate_channel(cfg: RunConfig, channel: ChannelPair, paths) -> list[CountRecord]:
    rho = emit_state(channel, cfg.source)
    drift = residual_drift(cfg, channel.index, paths)
    rho = apply_link(rho, channel, cfg.link, measurement_interval(channel.index, cfg), drift=drift)
    rate = pair_rate(channel, cfg.source, cfg.detector.gate_rate)
    return run_tomography(
        rho, cfg.detector, cfg.link, rate,
        rng=channel_rng(cfg, channel.index),
        noiseless=cfg.run.noiseless,
        channel=channel.index,
    )


def mle_options(cfg: RunConfig, channel: ChannelPair) -> MleOptions:
    acc = 0.0
    if cfg.tomography.subtract_accidentals:
        rate = pair_rate(channel, cfg.source, cfg.detector.gate_rate)
        acc = accidental_estimate(cfg.detector, cfg.link, rate)
    return MleOptions(max_evals=cfg.tomography.max_evals, accidentals=acc)


@dataclass
class ChannelOutcome:
    channel: ChannelPair
    records: list[CountRecord] = field(default_factory=list)
    result: ReconstructionResult | None = None
    entry: PlanEntry | None = None
    metrics: dict | None = None
    compensated_fidelity: float = float("nan")
    error: str = ""
    traceback: str = ""


def run_channel(cfg: RunConfig, channel: ChannelPair, paths) -> ChannelOutcome:
    out = ChannelOutcome(channel)
    try:
        out.records = simulate_channel(cfg, channel, paths)
        out.result = reconstruct(out.records, cfg.tomography.method, mle_options(cfg, channel))
        out.metrics = report_metrics(out.result)
        out.entry = fit_entry(out.result.rho, channel.index)
        out.compensated_fidelity = fidelity_pure(compensate_channel(out.result.rho, out.entry), PHI_PLUS)
    except Exception as exc:  # one bad channel must not void the sweep
        out.error = f"{type(exc).__name__}: {exc}"
        out.traceback = traceback.format_exc()
    return out


def _run_channel_job(args):
    return run_channel(*args)


@dataclass
class SweepReport:
    outcomes: list[ChannelOutcome]
    paths: tuple[np.ndarray, np.ndarray]

    @property
    def failed(self) -> list[ChannelOutcome]:
        return [o for o in self.outcomes if o.error]

    def rows(self) -> list[dict]:
        rows = []
        for o in self.outcomes:
            ch = o.channel
            hh = next((r.count for r in o.records if r.setting.label == "HH"), None)
            m = o.metrics or {}
            rows.append({
                "index": ch.index,
                "signal_nm": ch.signal_wavelength,
                "idler_nm": ch.idler_wavelength,
                "hh_counts": hh,
                "fidelity_phi_plus": o.compensated_fidelity if o.metrics else None,
                "fidelity_max": m.get("fidelity_max_phase"),
                "theta_star": m.get("theta_star"),
                "concurrence": m.get("concurrence"),
                "converged": o.result.converged if o.result else False,
                "error": o.error,
            })
        return rows

    def metrics_rows(self) -> list[dict]:
        return [metrics_row(o.channel.index, o.result) for o in self.outcomes if o.result is not None]

    def count_rows(self) -> list[dict]:
        return [row for o in self.outcomes for row in io.records_to_rows(o.records)]

    def compensation_rows(self) -> list[dict]:
        return [row for o in self.outcomes if o.entry for row in plan_entry_rows(o.entry)]

    def drift_rows(self) -> list[dict]:
        s, i = self.paths
        return [
            {"interval": t, "signal_angle": rotation_angle(s[t]), "idler_angle": rotation_angle(i[t])}
            for t in range(len(s))
        ]


def metrics_row(channel: int, result: ReconstructionResult) -> dict:
    m = report_metrics(result)
    return {
        "channel": channel,
        "fidelity_phi_plus": m["fidelity_phi_plus"],
        "fidelity_max": m["fidelity_max_phase"],
        "theta_star": m["theta_star"],
        "concurrence": m["concurrence"],
        "purity": m["purity"],
        "method": result.method,
        "converged": result.converged,
    }


def plan_entry_rows(entry: PlanEntry) -> list[dict]:
    return CompensationPlan(entries={entry.channel: entry}).rows()


def select_channels(plan: list[ChannelPair], channels) -> list[ChannelPair]:
    if channels is None:
        return plan
    wanted = set(channels)
    unknown = wanted - {ch.index for ch in plan}
    if unknown:
        raise ValueError(f"channels not in plan: {sorted(unknown)}")
    return [ch for ch in plan if ch.index in wanted]


def run_sweep(cfg: RunConfig, channels=None, workers: int = 1) -> SweepReport:
    plan = build_plan(cfg.grid)
    chosen = select_channels(plan, channels)
    # The walk always spans the full plan so subsets see the same drift.
    paths = drift_paths(cfg, measurement_interval(len(plan), cfg))
    jobs = [(cfg, ch, paths) for ch in chosen]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_channel_job, jobs))
    else:
        outcomes = [run_channel(*job) for job in jobs]
    return SweepReport(outcomes, paths)


def write_sweep(report: SweepReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    files = {
        "counts": out / "counts.csv",
        "metrics": out / "metrics.csv",
        "compensation": out / "compensation.csv",
        "sweep": out / "sweep.csv",
        "drift": out / "drift.csv",
    }
    io.write_csv(files["counts"], report.count_rows(), io.COUNTS_FIELDS)
    io.write_csv(files["metrics"], report.metrics_rows(), io.METRICS_FIELDS)
    io.write_csv(files["compensation"], report.compensation_rows(), io.COMPENSATION_FIELDS)
    io.write_csv(files["sweep"], report.rows(), io.SWEEP_FIELDS)
    io.write_csv(files["drift"], report.drift_rows(), io.DRIFT_FIELDS)
    return files
