"""Sweep engine: grids of training runs, deterministic CSVs, SVG panels.

A figure is a grid of configurations crossed with a block of seeds.  Run i
of every grid point uses dataset seed ``base_seed + i``; evaluation draws
come from the same seed through the dedicated evaluation stream tag, so
they never collide with training samples.  Grid points and seeds execute
in a fixed order and all output is written with round-trip float formatting,
which makes every CSV byte-reproducible on one platform.

Figures:

- risk_vs_d:      linear trainer, curves over d for each mean-norm scaling r
- adv_risk_vs_t:  linear trainer, curves over iteration t for each epsilon
- nn_risk_vs_d:   two-layer net with PGD attacks, curves over d for each r
- custom:         full product of the supplied grids, CSV output only
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .data import (
    STREAM_LINEAR_INIT,
    MixtureSpec,
    generate,
    keyed_rng,
    mu_from_scaling,
)
from .margins import adversarial_margin, standard_margin
from .network import (
    PgdConfig,
    adv_train_nn,
    evaluate_nn_risks,
    init_network,
)
from .norms import PerturbationModel
from .risk import _draw_test_block, analytic_risk, empirical_risks
from scipy.special import ndtr

from .svgplot import Series, write_line_plot
from .training import TrainConfig, train

__all__ = [
    "FIGURE_IDS",
    "ExperimentConfig",
    "SweepRow",
    "load_config_file",
    "run_figure",
]

FIGURE_IDS = ("risk_vs_d", "adv_risk_vs_t", "nn_risk_vs_d", "custom")

RAW_COLUMNS = (
    "seed,d,n,eta,p,epsilon,r,t,train_err,adv_train_err,std_risk,adv_risk,"
    "risk_method,loss,alignment,theta_l2,margin_std,margin_adv"
)

_AGG_METRICS = (
    "train_err",
    "adv_train_err",
    "std_risk",
    "adv_risk",
    "loss",
    "alignment",
    "theta_l2",
    "margin_std",
    "margin_adv",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one figure needs.  Scalar or tuple fields define the grid.

    ``epsilon`` and ``r`` accept a single value or a tuple of values;
    ``d_grid`` is always a tuple.  ``eval`` picks the risk evaluator
    ("analytic" needs gaussian noise; "monte_carlo" uses mc_samples fresh
    points per run).  The network fields (h, epochs, lr, pgd_steps) matter
    only for nn_risk_vs_d.

    ``alpha`` is the step size on the sample-averaged loss, the convention
    of the experimental protocol; the trainer itself steps on the summed
    loss, so constant-step runs use alpha/n internally.  (Summed-loss steps
    of 1e-3 overflow the exponential weights within two iterations once
    d**(2r) * n * alpha is large, e.g. d=1000, r=0.4.)
    """

    figure_id: str = "custom"
    name: Optional[str] = None
    n: int = 50
    eta: float = 0.1
    noise_dist: str = "gaussian"
    p: float = 2.0
    epsilon: float | tuple[float, ...] = 0.1
    r: float | tuple[float, ...] = 0.3
    d_grid: tuple[int, ...] = (1000,)
    T: int = 1000
    alpha: float = 1e-3
    step_mode: str = "constant"
    G: float = 10.0
    record_every: int = 10
    seeds: int = 10
    base_seed: int = 0
    eval: str = "analytic"
    mc_samples: int = 2000
    init_mode: str = "zero"
    margins: bool = True
    margin_iters: int = 1000
    h: int = 32
    epochs: int = 400
    lr: float = 0.01
    pgd_steps: int = 10
    output_dir: str = "."
    xlog: bool = True
    plot_metric: str = "adv_risk"

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"figure_id must be one of {FIGURE_IDS}, got {self.figure_id!r}")
        if self.eval not in ("analytic", "monte_carlo"):
            raise ValueError(f"eval must be 'analytic' or 'monte_carlo', got {self.eval!r}")
        if self.init_mode not in ("zero", "gaussian_scaled"):
            raise ValueError(
                f"init_mode must be 'zero' or 'gaussian_scaled', got {self.init_mode!r}"
            )
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")

    @property
    def prefix(self) -> str:
        return self.name or self.figure_id

    def epsilon_values(self) -> tuple[float, ...]:
        e = self.epsilon
        return tuple(e) if isinstance(e, (tuple, list)) else (float(e),)

    def r_values(self) -> tuple[float, ...]:
        r = self.r
        return tuple(r) if isinstance(r, (tuple, list)) else (float(r),)


@dataclass(frozen=True)
class SweepRow:
    """One evaluated point of a sweep: a (grid point, seed, iteration) triple."""

    seed: int
    d: int
    n: int
    eta: float
    p: float
    epsilon: float
    r: float
    t: int
    train_err: float
    adv_train_err: float
    std_risk: float
    adv_risk: float
    risk_method: str
    loss: float
    alignment: float
    theta_l2: float
    margin_std: float
    margin_adv: float

    def to_csv(self) -> str:
        vals = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float):
                vals.append(repr(v))
            else:
                vals.append(str(v))
        return ",".join(vals)


def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return tuple(_parse_value(part) for part in raw.split(",") if part.strip())
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        iv = int(raw)
        return iv
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def load_config_file(path: str) -> dict:
    """Parse flat ``key = value`` lines; '#' comments; commas make tuples."""
    out: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = line.partition("=")
            out[key.strip()] = _parse_value(raw)
    return out


_INT_FIELDS = {
    "n", "T", "record_every", "seeds", "base_seed", "mc_samples",
    "margin_iters", "h", "epochs", "pgd_steps",
}
_FLOAT_FIELDS = {"eta", "p", "alpha", "G", "lr"}
_TUPLE_INT_FIELDS = {"d_grid"}


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed key/value pairs."""
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(mapping) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    coerced = {}
    for key, val in mapping.items():
        if key in _INT_FIELDS:
            val = int(val)
        elif key in _FLOAT_FIELDS:
            val = float(val)
        elif key in _TUPLE_INT_FIELDS:
            if not isinstance(val, (tuple, list)):
                val = (val,)
            val = tuple(int(v) for v in val)
        elif key in ("epsilon", "r"):
            if isinstance(val, (tuple, list)):
                val = tuple(float(v) for v in val)
            else:
                val = float(val)
        coerced[key] = val
    return ExperimentConfig(**coerced)


def _linear_rows(
    cfg: ExperimentConfig, d: int, r: float, eps: float, seed: int
) -> list[SweepRow]:
    model = PerturbationModel(p=cfg.p, epsilon=eps)
    spec = MixtureSpec(
        d=d, mu=mu_from_scaling(d, r), noise_dist=cfg.noise_dist, eta=cfg.eta, seed=seed
    )
    ds = generate(spec, cfg.n)
    alpha = cfg.alpha / cfg.n if cfg.step_mode == "constant" else cfg.alpha
    tc = TrainConfig(
        model=model,
        step_mode=cfg.step_mode,
        alpha=alpha,
        G=cfg.G,
        T=cfg.T,
        record_every=cfg.record_every,
    )
    theta0 = None
    if cfg.init_mode == "gaussian_scaled":
        rng = keyed_rng(seed, STREAM_LINEAR_INIT)
        theta0 = rng.standard_normal(d) / math.sqrt(d)
    rec = train(ds, tc, theta0=theta0)

    m_std = m_adv = math.nan
    if cfg.margins:
        m_std = standard_margin(ds, model.q, max_iter=cfg.margin_iters).value
        m_adv = adversarial_margin(ds, model, max_iter=cfg.margin_iters).value

    if cfg.eval == "monte_carlo":
        test_feats, test_labels, _ = _draw_test_block(spec, cfg.mc_samples, seed)

    rows = []
    for i, t in enumerate(rec.snapshot_ts):
        theta = rec.thetas[i]
        if not np.any(theta):
            std = adv = math.nan
            method = cfg.eval
        elif cfg.eval == "analytic":
            rep = analytic_risk(theta, spec, model)
            std, adv, method = rep.std_risk, rep.adv_risk, rep.method
        else:
            std, adv = empirical_risks(theta, test_feats, test_labels, model)
            method = "monte_carlo"
        rows.append(
            SweepRow(
                seed=seed,
                d=d,
                n=cfg.n,
                eta=cfg.eta,
                p=cfg.p,
                epsilon=eps,
                r=r,
                t=t,
                train_err=float(rec.train_errors[i]),
                adv_train_err=float(rec.adv_train_errors[i]),
                std_risk=std,
                adv_risk=adv,
                risk_method=method,
                loss=float(rec.losses[t]),
                alignment=float(rec.alignments[t]),
                theta_l2=float(rec.theta_l2[t]),
                margin_std=m_std,
                margin_adv=m_adv,
            )
        )
    return rows


def _nn_rows(
    cfg: ExperimentConfig, d: int, r: float, eps: float, seed: int
) -> list[SweepRow]:
    model = PerturbationModel(p=cfg.p, epsilon=eps)
    spec = MixtureSpec(
        d=d, mu=mu_from_scaling(d, r), noise_dist=cfg.noise_dist, eta=cfg.eta, seed=seed
    )
    ds = generate(spec, cfg.n)
    pgd = PgdConfig(model=model, steps=cfg.pgd_steps)
    net0 = init_network(d, h=cfg.h, seed=seed)
    # lr follows the same averaged-loss convention as alpha
    net, log = adv_train_nn(ds, net0, pgd, epochs=cfg.epochs, lr=cfg.lr / cfg.n)
    rep = evaluate_nn_risks(net, spec, pgd, m=cfg.mc_samples, seed=seed)

    m_std = m_adv = math.nan
    if cfg.margins:
        m_std = standard_margin(ds, model.q, max_iter=cfg.margin_iters).value
        m_adv = adversarial_margin(ds, model, max_iter=cfg.margin_iters).value

    t = log.epochs
    return [
        SweepRow(
            seed=seed,
            d=d,
            n=cfg.n,
            eta=cfg.eta,
            p=cfg.p,
            epsilon=eps,
            r=r,
            t=t,
            train_err=float(log.train_errors[t]),
            adv_train_err=float(log.adv_train_errors[t]),
            std_risk=rep.std_risk,
            adv_risk=rep.adv_risk,
            risk_method=rep.method,
            loss=float(log.losses[t]),
            alignment=math.nan,
            theta_l2=float(log.param_l2[t]),
            margin_std=m_std,
            margin_adv=m_adv,
        )
    ]


def _grid(cfg: ExperimentConfig) -> Iterable[tuple[int, float, float]]:
    """Deterministic (d, r, epsilon) grid order: r outer, d middle, eps inner."""
    for r in cfg.r_values():
        for d in cfg.d_grid:
            for eps in cfg.epsilon_values():
                yield d, r, eps


def _aggregate(rows: list[SweepRow], gaussian: bool = True) -> list[dict]:
    groups: dict[tuple, list[SweepRow]] = {}
    order: list[tuple] = []
    for row in rows:
        key = (row.d, row.n, row.eta, row.p, row.epsilon, row.r, row.t)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        grp = groups[key]
        rec: dict = dict(zip(("d", "n", "eta", "p", "epsilon", "r", "t"), key))
        rec["seeds"] = len(grp)
        # two candidate "optimal risk" baselines: the flip rate alone, and
        # the best achievable risk of any linear rule under gaussian noise
        rec["baseline_eta"] = rec["eta"]
        rec["baseline_opt"] = (
            rec["eta"] + (1.0 - 2.0 * rec["eta"]) * float(ndtr(-(rec["d"] ** rec["r"])))
            if gaussian
            else math.nan
        )
        for metric in _AGG_METRICS:
            vals = np.array([getattr(g, metric) for g in grp], dtype=float)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                rec[f"{metric}_mean"] = math.nan
                rec[f"{metric}_stderr"] = math.nan
            else:
                rec[f"{metric}_mean"] = float(vals.mean())
                rec[f"{metric}_stderr"] = (
                    float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                )
        out.append(rec)
    return out


def _write_raw(rows: list[SweepRow], path: Path) -> None:
    with open(path, "w") as fh:
        fh.write(RAW_COLUMNS + "\n")
        for row in rows:
            fh.write(row.to_csv() + "\n")


def _write_agg(agg: list[dict], path: Path) -> None:
    if not agg:
        raise ValueError("no rows to aggregate")
    cols = list(agg[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in agg:
            fh.write(
                ",".join(
                    repr(v) if isinstance(v, float) else str(v) for v in (rec[c] for c in cols)
                )
                + "\n"
            )


def _final_t(agg: list[dict]) -> int:
    return max(rec["t"] for rec in agg)


def _panel_series(
    agg: list[dict], x_key: str, curve_key: str, metric: str, fixed: dict
) -> list[Series]:
    series = []
    curve_vals = sorted({rec[curve_key] for rec in agg})
    for cv in curve_vals:
        pts = [
            rec
            for rec in agg
            if rec[curve_key] == cv and all(rec[k] == v for k, v in fixed.items())
        ]
        pts.sort(key=lambda rec: rec[x_key])
        if not pts:
            continue
        series.append(
            Series(
                label=f"{curve_key}={cv:g}" if isinstance(cv, float) else f"{curve_key}={cv}",
                xs=np.array([rec[x_key] for rec in pts], dtype=float),
                ys=np.array([rec[f"{metric}_mean"] for rec in pts], dtype=float),
                yerr=np.array([rec[f"{metric}_stderr"] for rec in pts], dtype=float),
            )
        )
    return series


def run_figure(cfg: ExperimentConfig, svg: bool = True) -> dict[str, str]:
    """Run the grid, write raw/aggregated CSVs and SVG panels.

    Returns a mapping from artifact kind ("raw", "agg", and one entry per
    SVG panel) to the written path.  svg=False skips the panels.
    """
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows: list[SweepRow] = []
    runner = _nn_rows if cfg.figure_id == "nn_risk_vs_d" else _linear_rows
    for d, r, eps in _grid(cfg):
        for i in range(cfg.seeds):
            rows.extend(runner(cfg, d, r, eps, cfg.base_seed + i))

    raw_path = outdir / f"{cfg.prefix}_raw.csv"
    agg_path = outdir / f"{cfg.prefix}_agg.csv"
    _write_raw(rows, raw_path)
    agg = _aggregate(rows, gaussian=cfg.noise_dist == "gaussian")
    _write_agg(agg, agg_path)
    written = {"raw": str(raw_path), "agg": str(agg_path)}

    if not svg:
        return written
    # panels are lettered in figure order; the SVG title names the metric
    if cfg.figure_id in ("risk_vs_d", "nn_risk_vs_d"):
        t_fin = _final_t(agg)
        finals = [rec for rec in agg if rec["t"] == t_fin]
        for letter, metric in zip("ab", ("std_risk", "adv_risk")):
            series = _panel_series(finals, "d", "r", metric, fixed={})
            path = outdir / f"{cfg.prefix}_{letter}.svg"
            write_line_plot(
                str(path),
                series,
                xlabel="d",
                ylabel=metric.replace("_", " "),
                title=f"{metric.replace('_', ' ')}  (p={cfg.p:g}, "
                f"eps={cfg.epsilon_values()[0]:g}, n={cfg.n}, eta={cfg.eta:g})",
                xlog=cfg.xlog,
            )
            written[f"panel_{letter}"] = str(path)
    elif cfg.figure_id == "adv_risk_vs_t":
        metric = cfg.plot_metric
        pos = [rec for rec in agg if rec["t"] >= 1]
        series = _panel_series(pos, "t", "epsilon", metric, fixed={})
        path = outdir / f"{cfg.prefix}_a.svg"
        write_line_plot(
            str(path),
            series,
            xlabel="iteration",
            ylabel=metric.replace("_", " "),
            title=f"{metric.replace('_', ' ')} over training  (p={cfg.p:g}, "
            f"d={cfg.d_grid[0]}, n={cfg.n}, eta={cfg.eta:g})",
            xlog=False,
        )
        written["panel_a"] = str(path)
    return written
