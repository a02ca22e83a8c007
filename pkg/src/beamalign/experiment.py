"""Monte Carlo experiment harness: seeded sweeps, estimates, figure presets.

Trials are evaluated in fixed-size chunks on shared measurement tables, so
all budgets and strategies of a run see common random numbers, and a rerun
with the same spec (serial or parallel, numba or numpy lane) reproduces the
output byte for byte.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from . import _kernels as kernels
from ._engine import build_tables, make_layout
from .arrays import AngleInterval, UniformLinearArray
from .channel import calibrate_snr, channel_model_from_config
from .codebook import HierarchicalCodebook, build_hierarchical_codebook
from .training import InfeasibleBudgetError, TrainingConfig, pilot_schedule

__all__ = [
    "STRATEGIES",
    "CHUNK_TRIALS",
    "SweepSpec",
    "EstimateRow",
    "EmpiricalCdf",
    "se_cdf",
    "run_sweep",
    "run_strategies",
    "figure_preset",
    "FigurePreset",
    "rows_to_csv",
    "write_csv",
    "write_manifest",
]

STRATEGIES = ("exhaustive", "hierarchical_equal", "hierarchical_unequal")

# Fixed so that reruns are byte-identical regardless of machine or threads.
CHUNK_TRIALS = 8192

CSV_HEADER = "budget,n_tot_used,p_miss,ci95,mean_se,se_p10,se_p50,se_p90"

_SECTOR_CODEBOOK = {
    "num_tx": 64,
    "num_rx": 4,
    "tx_sector_sine": [-0.5, 0.5],
    "rx_sector_sine": [-1.0, 1.0],
    "tx_level_sizes": [2, 4, 8, 16, 32],
    "rx_level_sizes": [4],
    "synthesis": "deactivation",
}


@dataclass(frozen=True)
class SweepSpec:
    """One strategy swept over pilot budgets under a fixed scenario."""

    strategy: str
    channel: dict
    codebook: dict
    snr_db: float
    budgets: tuple[int, ...]
    trials: int
    base_seed: int
    levels_used: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if list(self.budgets) != sorted(self.budgets):
            raise ValueError("budgets must be sorted ascending")
        object.__setattr__(self, "budgets", tuple(int(b) for b in self.budgets))

    def to_config(self) -> dict:
        return {
            "strategy": self.strategy,
            "channel": dict(self.channel),
            "codebook": dict(self.codebook),
            "snr_db": self.snr_db,
            "budgets": list(self.budgets),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "levels_used": self.levels_used,
        }


@dataclass(frozen=True)
class EstimateRow:
    budget: int
    n_tot_used: int
    p_miss: float
    ci95: float
    mean_se: float
    se_p10: float
    se_p50: float
    se_p90: float
    feasible: bool = True
    p_final_mismatch: float = float("nan")   # final pair vs global optimum; diagnostic


class EmpiricalCdf:
    """Empirical CDF with linear-interpolation percentile lookup."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError("empirical CDF needs at least one value")
        self.values = np.sort(values)

    def quantile(self, percentile: float) -> float:
        return float(np.percentile(self.values, percentile))

    def cdf_at(self, x: float) -> float:
        return float(np.searchsorted(self.values, x, side="right") / len(self.values))

    def points(self):
        n = len(self.values)
        return [(float(v), (i + 1) / n) for i, v in enumerate(self.values)]


def se_cdf(spectral_efficiencies) -> EmpiricalCdf:
    """Empirical CDF of per-trial spectral efficiencies."""
    return EmpiricalCdf(spectral_efficiencies)


def build_codebooks(cfg: dict) -> tuple[HierarchicalCodebook, HierarchicalCodebook]:
    tx = build_hierarchical_codebook(
        UniformLinearArray(cfg["num_tx"]),
        AngleInterval(*cfg["tx_sector_sine"]),
        list(cfg["tx_level_sizes"]),
        synthesis=cfg["synthesis"],
    )
    rx = build_hierarchical_codebook(
        UniformLinearArray(cfg["num_rx"]),
        AngleInterval(*cfg["rx_sector_sine"]),
        list(cfg["rx_level_sizes"]),
        synthesis=cfg["synthesis"],
    )
    return tx, rx


def _configure_threads():
    value = os.environ.get("BEAMALIGN_THREADS")
    if value and kernels.USE_NUMBA:
        import numba
        numba.set_num_threads(max(1, int(value)))


def _budget_plans(tx_cb, rx_cb, strategy, budgets, transmit_power, levels_used):
    """Per-budget pilot plans; infeasible budgets become None entries."""
    plans = []
    top_pairs = tx_cb.level_sizes[-1] * rx_cb.level_sizes[-1]
    for budget in budgets:
        if strategy == "exhaustive":
            n = budget // top_pairs
            if n < 1:
                plans.append(None)
            else:
                plans.append({"pilots": n, "used": n * top_pairs})
        else:
            allocation = "equal" if strategy == "hierarchical_equal" else "unequal_gamma"
            cfg = TrainingConfig(total_pilots=budget, transmit_power=transmit_power,
                                 allocation=allocation)
            try:
                pilots, used = pilot_schedule(tx_cb, rx_cb, cfg, levels_used)
            except InfeasibleBudgetError:
                plans.append(None)
            else:
                plans.append({"pilots": pilots, "used": used})
    return plans


def run_strategies(spec: SweepSpec, strategies) -> dict[str, list[EstimateRow]]:
    """Evaluate several strategies on shared per-trial tables (CRN)."""
    _configure_threads()
    for st in strategies:
        if st not in STRATEGIES:
            raise ValueError(f"unknown strategy {st!r}")
    tx_cb, rx_cb = build_codebooks(spec.codebook)
    model = channel_model_from_config(spec.channel)
    snr = calibrate_snr(spec.snr_db)
    k_levels = spec.levels_used or tx_cb.num_levels
    layout = make_layout(tx_cb, rx_cb, k_levels)
    budgets = spec.budgets
    n_budgets = len(budgets)
    trials = spec.trials

    plans = {st: _budget_plans(tx_cb, rx_cb, st, budgets, snr.transmit_power,
                               k_levels)
             for st in strategies}

    mis = {st: np.zeros((n_budgets, trials), dtype=np.uint8) for st in strategies}
    final_gain = {st: np.zeros((n_budgets, trials)) for st in strategies}
    glob_mismatch = {st: np.zeros((n_budgets, trials), dtype=np.uint8)
                     for st in strategies}

    sigma_sq = snr.noise_power
    power = snr.transmit_power
    for lo in range(0, trials, CHUNK_TRIALS):
        hi = min(lo + CHUNK_TRIALS, trials)
        h, zeta = build_tables(tx_cb, rx_cb, layout, model, spec.base_seed, lo, hi)
        g = h.real ** 2 + h.imag ** 2
        top_opt = layout.top_offset + np.argmax(
            g[:, layout.top_offset:layout.top_offset + layout.top_pairs], axis=1)
        for st in strategies:
            for b, plan in enumerate(plans[st]):
                if plan is None:
                    continue
                if st == "exhaustive":
                    scale = math.sqrt(plan["pilots"] * power / sigma_sq)
                    m, slot = kernels.exhaustive_eval(
                        h, zeta, g, layout.top_offset, layout.top_pairs, scale)
                else:
                    scales = np.sqrt(np.asarray(plan["pilots"], dtype=float)
                                     * power / sigma_sq)
                    m, slot = kernels.hier_eval(
                        h, zeta, g, layout.offsets, layout.tx_sizes,
                        layout.rx_sizes, layout.tx_ratios, layout.rx_ratios,
                        scales)
                mis[st][b, lo:hi] = m
                final_gain[st][b, lo:hi] = np.take_along_axis(
                    g, slot[:, None], axis=1)[:, 0]
                glob_mismatch[st][b, lo:hi] = (slot != top_opt).astype(np.uint8)

    results = {}
    for st in strategies:
        rows = []
        for b, budget in enumerate(budgets):
            plan = plans[st][b]
            if plan is None:
                rows.append(EstimateRow(
                    budget=budget, n_tot_used=0, p_miss=float("nan"),
                    ci95=float("nan"), mean_se=float("nan"),
                    se_p10=float("nan"), se_p50=float("nan"),
                    se_p90=float("nan"), feasible=False))
                continue
            p_hat = float(np.count_nonzero(mis[st][b]) / trials)
            ci = 1.96 * math.sqrt(p_hat * (1.0 - p_hat) / trials)
            se = np.log2(1.0 + power * final_gain[st][b] / sigma_sq)
            rows.append(EstimateRow(
                budget=budget,
                n_tot_used=int(plan["used"]),
                p_miss=p_hat,
                ci95=ci,
                mean_se=float(se.mean()),
                se_p10=float(np.percentile(se, 10)),
                se_p50=float(np.percentile(se, 50)),
                se_p90=float(np.percentile(se, 90)),
                p_final_mismatch=float(np.count_nonzero(glob_mismatch[st][b]) / trials),
            ))
        results[st] = rows
    return results


def run_sweep(spec: SweepSpec) -> list[EstimateRow]:
    """Run one strategy over its budgets; rows carry binomial 95% CIs."""
    return run_strategies(spec, [spec.strategy])[spec.strategy]


@dataclass(frozen=True)
class FigurePreset:
    """A reference scenario: shared sweep template plus the strategies compared."""

    name: str
    strategies: tuple[str, ...]
    template: SweepSpec
    description: str = field(default="", compare=False)


def figure_preset(preset_id: str) -> FigurePreset:
    """Experiment configurations reproducing the reference scenarios.

    fig2: single level (8 pairs, combined gain 16), ideal beams, single path.
    fig3: 5-level ideal codebooks vs exhaustive, single path.
    fig4/fig5: synthesized beams, LOS Rician (K = 13.2 dB).
    fig6/fig7: synthesized beams, NLOS Poisson multipath (K = 6 dB).
    All at SNR -15 dB by default; fig5/fig7 are the spectral-efficiency views.
    """
    base_seed = 20230 + int(preset_id[3:]) if preset_id[3:].isdigit() else 20230
    common = dict(snr_db=-15.0, trials=100_000, base_seed=base_seed)
    single = {"model": "single_path", "aod_deg": [-30.0, 30.0],
              "aoa_deg": [0.0, 360.0]}
    los = {"model": "los_rician", "k_factor_db": 13.2,
           "aod_deg": [-30.0, 30.0], "aoa_deg": [0.0, 360.0]}
    nlos = {"model": "nlos_multipath", "k_factor_db": 6.0, "mean_paths": 1.8,
            "aod_deg": [-30.0, 30.0], "aoa_deg": [0.0, 360.0]}
    ideal_cb = dict(_SECTOR_CODEBOOK, synthesis="ideal")
    synth_cb = dict(_SECTOR_CODEBOOK)

    if preset_id == "fig2":
        budgets = tuple(8 * n for n in (10, 15, 20, 25, 30, 35, 40, 50, 60, 70, 80))
        spec = SweepSpec(strategy="hierarchical_equal", channel=single,
                         codebook=ideal_cb, budgets=budgets, levels_used=1,
                         **common)
        return FigurePreset("fig2", ("hierarchical_equal",), spec,
                            "single-level misalignment vs pilots, ideal beams")
    if preset_id == "fig3":
        budgets = (16, 32, 64, 128, 192, 256, 384, 512, 768, 1024, 2048)
        spec = SweepSpec(strategy="exhaustive", channel=single,
                         codebook=ideal_cb, budgets=budgets, **common)
        return FigurePreset("fig3", STRATEGIES, spec,
                            "search strategies vs total pilots, ideal beams")
    if preset_id == "fig4":
        budgets = (16, 64, 128, 192, 256, 320, 448, 640, 896, 1280)
        spec = SweepSpec(strategy="exhaustive", channel=los,
                         codebook=synth_cb, budgets=budgets, **common)
        return FigurePreset("fig4", STRATEGIES, spec,
                            "misalignment vs pilots, LOS Rician, synthesized beams")
    if preset_id == "fig5":
        spec = SweepSpec(strategy="exhaustive", channel=los,
                         codebook=synth_cb, budgets=(16, 640, 1280), **common)
        return FigurePreset("fig5", STRATEGIES, spec,
                            "spectral-efficiency CDF, LOS Rician")
    if preset_id == "fig6":
        budgets = (16, 64, 128, 192, 256, 320, 448, 640, 896, 1280)
        spec = SweepSpec(strategy="exhaustive", channel=nlos,
                         codebook=synth_cb, budgets=budgets, **common)
        return FigurePreset("fig6", ("exhaustive", "hierarchical_equal"), spec,
                            "misalignment vs pilots, NLOS multipath")
    if preset_id == "fig7":
        spec = SweepSpec(strategy="exhaustive", channel=nlos,
                         codebook=synth_cb, budgets=(16, 640, 1280), **common)
        return FigurePreset("fig7", ("exhaustive", "hierarchical_equal"), spec,
                            "spectral-efficiency CDF, NLOS multipath")
    raise ValueError(f"unknown figure preset {preset_id!r}")


def run_figure(preset: FigurePreset, trials: int | None = None,
               seed: int | None = None, snr_db: float | None = None,
               budgets=None) -> tuple[dict[str, list[EstimateRow]], dict]:
    """Run all strategies of a preset with CRN; returns rows and a manifest."""
    spec = preset.template
    updates = {}
    if trials is not None:
        updates["trials"] = trials
    if seed is not None:
        updates["base_seed"] = seed
    if snr_db is not None:
        updates["snr_db"] = snr_db
    if budgets is not None:
        updates["budgets"] = tuple(sorted(int(b) for b in budgets))
    if updates:
        spec = replace(spec, **updates)
    start = time.time()
    results = run_strategies(spec, preset.strategies)
    manifest = {
        "config": spec.to_config(),
        "strategies": list(preset.strategies),
        "meta": {
            "preset": preset.name,
            "version": __version__,
            "backend": kernels.BACKEND,
            "wall_time_s": round(time.time() - start, 3),
            # final chosen pair vs global finest-level optimum, per row;
            # null for infeasible rows (keeps the manifest strict JSON)
            "diagnostics": {
                st: [None if math.isnan(row.p_final_mismatch)
                     else row.p_final_mismatch for row in rows]
                for st, rows in results.items()
            },
        },
    }
    return results, manifest


# ---------------------------------------------------------------------------
# CSV / manifest output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def rows_to_csv(rows) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.budget, r.n_tot_used, r.p_miss, r.ci95, r.mean_se,
            r.se_p10, r.se_p50, r.se_p90)))
    return "\n".join(lines) + "\n"


def write_csv(path, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(rows_to_csv(rows))


def write_manifest(path, manifest):
    import json

    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
