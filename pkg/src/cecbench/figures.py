"""Figure dataset builders: evaluate the protocol models over parameter sweeps.

Each builder emits a long-form dataset (x, series, y, ci99) with rows sorted
by x within each series, plus a sanity predicate that guards the qualitative
shape the sweep is expected to reproduce (latency growth, failure-probability
monotonicity, the efficiency ordering, the optimum ridge).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .cec import CecConfig, optimal_tcm_case3, ucc_case3, ucc_case3_at_optimum
from .channel import ChannelParams
from .config import FIGURE_TAGS, ExperimentConfig
from .protocols import (
    HarqParams,
    Protocol,
    harq_expected_rounds,
    harq_latency,
    occupycow_latency,
    occupycow_phase_probs,
    reflexup_latency,
    reflexup_pfail,
    split_nodes,
    srarq_latency,
)

__all__ = ["FigureDataset", "build_figure", "run_experiment", "write_dataset", "summarize"]

_Z99 = float(stats.norm.ppf(0.995))


@dataclass
class FigureDataset:
    """Long-form plot data: one (x, series, y, ci99) row per point."""

    tag: str
    x_name: str
    y_name: str
    rows: list[tuple[float, str, float, float]]

    def series(self, name: str) -> list[tuple[float, float]]:
        return [(x, y) for x, s, y, _ in self.rows if s == name]

    def series_names(self) -> list[str]:
        seen: dict[str, None] = {}
        for _, s, _, _ in self.rows:
            seen.setdefault(s)
        return list(seen)

    def sort(self) -> None:
        self.rows.sort(key=lambda r: (r[1], r[0]))

    def check(self) -> None:
        for x, s, y, ci in self.rows:
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(ci)):
                raise RuntimeError(f"{self.tag}: non-finite row ({x}, {s}, {y}, {ci})")


def _point_seed(master_seed: int, tag: str, index: int) -> int:
    """Deterministic per-sweep-point seed derived from (master seed, point)."""
    key = (FIGURE_TAGS.index(tag), index)
    return int(np.random.SeedSequence(master_seed, spawn_key=key).generate_state(1)[0])


def _chan(cfg: ExperimentConfig, snr_db: float | None = None) -> ChannelParams:
    return ChannelParams(
        snr_db=cfg.snr_db if snr_db is None else snr_db,
        bandwidth_hz=cfg.bandwidth_hz,
        rate_bps=cfg.rate_bps,
    )


def _cec(cfg: ExperimentConfig, n_tasks: int | None = None) -> CecConfig:
    return CecConfig(
        n_tasks=cfg.n_tasks if n_tasks is None else n_tasks,
        k_rbs=cfg.k_rbs,
        c=cfg.c,
        c0=cfg.c0,
        epsilon=cfg.epsilon,
    )


def _oc_windows(cfg: ExperimentConfig, n_sensors: int) -> tuple[float, float]:
    base = n_sensors * (cfg.packet_bits + 1) / cfg.rate_bps
    return cfg.oc_t1_scale * base, cfg.oc_t2_scale * base


def protocol_latency(
    cfg: ExperimentConfig, protocol: Protocol, n_g: int, t_cp: float, seed: int
) -> tuple[float, float]:
    """(t_cm, ci99) of one protocol at one network size."""
    shape = split_nodes(n_g, cfg.relay_sensor_ratio, cfg.packet_bits)
    chan = _chan(cfg)
    if protocol == Protocol.SELECTIVE_REPEAT_ARQ:
        return srarq_latency(shape, chan), 0.0
    if protocol == Protocol.HARQ:
        est = harq_expected_rounds(
            chan, HarqParams(cfg.harq_max_rounds, cfg.harq_diversity), cfg.trials, seed
        )
        scale = shape.n_total * shape.packet_bits / chan.rate_bps
        return harq_latency(shape, chan, est.value), _Z99 * est.stderr * scale
    if protocol == Protocol.OCCUPY_COW:
        t1, t2 = _oc_windows(cfg, shape.n_sensors)
        return occupycow_latency(occupycow_phase_probs(shape, chan, t1, t2)), 0.0
    if protocol == Protocol.REFLEXUP:
        return reflexup_latency(shape, chan, _cec(cfg), t_cp).t_cm, 0.0
    raise ValueError(protocol)


def build_fig7(cfg: ExperimentConfig) -> FigureDataset:
    """Padded-slot efficiency surface over (t_cm, t_cp), one series per t_cp."""
    cec = _cec(cfg)
    t_cm_grid = np.linspace(
        cfg.fig7_t_cm_max / cfg.fig7_t_cm_points, cfg.fig7_t_cm_max, cfg.fig7_t_cm_points
    )
    t_cp_grid = np.linspace(
        cfg.fig7_t_cp_max / cfg.fig7_t_cp_points, cfg.fig7_t_cp_max, cfg.fig7_t_cp_points
    )
    rows = []
    for t_cp in t_cp_grid:
        values = ucc_case3(t_cm_grid, float(t_cp), cec)
        series = f"tcp={t_cp:.6g}"
        rows.extend((float(t), series, float(u), 0.0) for t, u in zip(t_cm_grid, values))
    ds = FigureDataset("fig7_surface", "t_cm_s", "u_cc", rows)
    _check_fig7(ds, cfg, cec, t_cm_grid)
    return ds


def _check_fig7(ds, cfg, cec, t_cm_grid) -> None:
    step = float(t_cm_grid[1] - t_cm_grid[0])
    for name in ds.series_names():
        t_cp = float(name.split("=")[1])
        pts = ds.series(name)
        ridge = max(pts, key=lambda p: p[1])[0]
        expected = optimal_tcm_case3(t_cp, cec)
        if expected <= t_cm_grid[-1] and abs(ridge - expected) > step:
            raise RuntimeError(
                f"fig7 ridge off: series {name} peaks at {ridge}, expected {expected}"
            )


def build_fig_ucc_vs_size(cfg: ExperimentConfig, tag: str, t_cp: float) -> FigureDataset:
    """Efficiency vs network size, one series per protocol.

    Baselines are charged their achieved uplink time; the two-phase adaptive
    protocol operates at its padded-slot optimum whenever the loss-free
    transfer fits inside that window (it does across the default grids).
    """
    cec = _cec(cfg)
    rows = []
    for i, n_g in enumerate(sorted(cfg.n_g_grid)):
        for protocol in cfg.protocols:
            if protocol == Protocol.REFLEXUP:
                lat = reflexup_latency(
                    split_nodes(n_g, cfg.relay_sensor_ratio, cfg.packet_bits),
                    _chan(cfg),
                    cec,
                    t_cp,
                )
                u = (
                    ucc_case3_at_optimum(t_cp, cec)
                    if not lat.infeasible
                    else ucc_case3(lat.t_cm, t_cp, cec)
                )
                rows.append((float(n_g), protocol.value, float(u), 0.0))
            else:
                t_cm, _ = protocol_latency(cfg, protocol, n_g, t_cp, _point_seed(cfg.seed, tag, i))
                rows.append((float(n_g), protocol.value, float(ucc_case3(t_cm, t_cp, cec)), 0.0))
    ds = FigureDataset(tag, "n_g", "u_cc", rows)
    _check_reflexup_dominates(ds)
    return ds


def _check_reflexup_dominates(ds: FigureDataset) -> None:
    others = [n for n in ds.series_names() if n != Protocol.REFLEXUP.value]
    ref = dict(ds.series(Protocol.REFLEXUP.value))
    if not ref:
        return
    for name in others:
        for x, y in ds.series(name):
            if y > ref[x] + 1e-12:
                raise RuntimeError(
                    f"{ds.tag}: series {name} exceeds the adaptive protocol at n_g={x}"
                )


def build_fig11(cfg: ExperimentConfig) -> FigureDataset:
    """Uplink latency vs network size, one series per protocol."""
    rows = []
    for i, n_g in enumerate(sorted(cfg.n_g_grid)):
        for protocol in cfg.protocols:
            t_cm, ci = protocol_latency(
                cfg, protocol, n_g, cfg.t_cp_fig11, _point_seed(cfg.seed, "fig11_tcm", i)
            )
            rows.append((float(n_g), protocol.value, float(t_cm), float(ci)))
    ds = FigureDataset("fig11_tcm", "n_g", "t_cm_s", rows)
    for name in ds.series_names():
        pts = ds.series(name)
        ys = [y for _, y in pts]
        if name == Protocol.REFLEXUP.value:
            # The steering target caps this series; it may plateau but never drop.
            if any(b < a - 1e-12 for a, b in zip(ys, ys[1:])):
                raise RuntimeError("fig11: adaptive-protocol latency decreased with size")
        elif any(b <= a for a, b in zip(ys, ys[1:])):
            raise RuntimeError(f"fig11: series {name} is not strictly increasing")
    return ds


def build_fig12(cfg: ExperimentConfig) -> FigureDataset:
    """Efficiency of the adaptive protocol vs SNR and vs task count.

    The SNR series discounts the optimal-point efficiency by the end-to-end
    failure probability (a failed loop contributes no useful computation);
    the task series evaluates the optimal-point efficiency as the task count
    grows.
    """
    rows = []
    u_star = ucc_case3_at_optimum(cfg.t_cp_fig12, _cec(cfg))
    shape = split_nodes(cfg.fig12_n_g, cfg.relay_sensor_ratio, cfg.packet_bits)
    for snr in sorted(cfg.snr_grid_db):
        p_fail = reflexup_pfail(
            shape, _chan(cfg, snr), cfg.reflexup_t_vs, p_timeout=cfg.p_timeout
        )
        rows.append((float(snr), "ucc_vs_snr", float(u_star * (1.0 - p_fail)), 0.0))
    for n_tasks in sorted(cfg.task_grid):
        u = ucc_case3_at_optimum(cfg.t_cp_fig12, _cec(cfg, n_tasks=n_tasks))
        rows.append((float(n_tasks), "ucc_vs_tasks", float(u), 0.0))
    ds = FigureDataset("fig12_ucc_snr_tasks", "x", "u_cc", rows)
    tasks = [y for x, y in ds.series("ucc_vs_tasks") if x >= 10]
    if any(b > a + 1e-15 for a, b in zip(tasks, tasks[1:])):
        raise RuntimeError("fig12: efficiency increased with task count")
    return ds


def build_fig13(cfg: ExperimentConfig) -> FigureDataset:
    """End-to-end failure probability vs SNR, one series per network size."""
    rows = []
    for n_g in cfg.fig13_n_g:
        shape = split_nodes(n_g, cfg.relay_sensor_ratio, cfg.packet_bits)
        series = f"n_g={n_g}"
        for snr in sorted(cfg.snr_grid_db):
            p = reflexup_pfail(
                shape, _chan(cfg, snr), cfg.reflexup_t_vs, p_timeout=cfg.p_timeout
            )
            rows.append((float(snr), series, float(p), 0.0))
    ds = FigureDataset("fig13_pfail", "snr_db", "p_fail", rows)
    for name in ds.series_names():
        ys = [y for _, y in ds.series(name)]
        if any(b > a + 1e-15 for a, b in zip(ys, ys[1:])):
            raise RuntimeError(f"fig13: series {name} is not non-increasing in SNR")
    return ds


_BUILDERS = {
    "fig7_surface": lambda cfg: build_fig7(cfg),
    "fig9_ucc": lambda cfg: build_fig_ucc_vs_size(cfg, "fig9_ucc", cfg.t_cp_fig9),
    "fig10_ucc": lambda cfg: build_fig_ucc_vs_size(cfg, "fig10_ucc", cfg.t_cp_fig10),
    "fig11_tcm": lambda cfg: build_fig11(cfg),
    "fig12_ucc_snr_tasks": lambda cfg: build_fig12(cfg),
    "fig13_pfail": lambda cfg: build_fig13(cfg),
}


def build_figure(cfg: ExperimentConfig, tag: str) -> FigureDataset:
    ds = _BUILDERS[tag](cfg)
    ds.sort()
    ds.check()
    return ds


def write_dataset(ds: FigureDataset, out_dir: str) -> str:
    """One CSV per dataset: <x>,series,<y>,ci99 with %.10g numeric formatting."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{ds.tag}.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{ds.x_name},series,{ds.y_name},ci99\n")
        for x, series, y, ci in ds.rows:
            fh.write(f"{x:.10g},{series},{y:.10g},{ci:.10g}\n")
    return path


def summarize(ds: FigureDataset) -> list[str]:
    """min/max/argmax lines per series, for the run log."""
    lines = []
    for name in ds.series_names():
        pts = ds.series(name)
        ys = [y for _, y in pts]
        best_x = max(pts, key=lambda p: p[1])[0]
        lines.append(
            f"{ds.tag:22s} {name:22s} n={len(pts):3d} "
            f"min={min(ys):.6g} max={max(ys):.6g} argmax_x={best_x:.6g}"
        )
    return lines


def run_experiment(cfg: ExperimentConfig) -> dict[str, FigureDataset]:
    """Build and persist every requested figure dataset.

    A failure in one figure is reported but does not abort the others; if any
    figure failed, a RuntimeError wrapping the collected reasons is raised at
    the end.
    """
    datasets: dict[str, FigureDataset] = {}
    failures: list[str] = []
    for tag in cfg.figures:
        try:
            ds = build_figure(cfg, tag)
            write_dataset(ds, cfg.out_dir)
            datasets[tag] = ds
        except Exception as exc:  # keep the remaining figures alive
            failures.append(f"{tag}: {exc}")
    if failures:
        raise RuntimeError("figure build failures:\n  " + "\n  ".join(failures))
    return datasets
