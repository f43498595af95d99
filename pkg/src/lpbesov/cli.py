"""Batch command-line surface.

Commands: decompose, verify-frame, besov, equivalence, diagnostics.  Every
command writes a canonical JSON report (plus a CSV projection and a figure)
into the output directory.  Exit codes: 0 success, 2 configuration or
validation failure, 3 numerical failure (a partial report is still written).

Configuration may come from flags or from a JSON config file (--config);
explicit flags win on conflict.  Reports embed the config echo, the library
version, the seed, and the operator provenance.
"""

import argparse
import csv
import datetime
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__, plotting
from .besov import (
    BesovParams,
    GFunctionParams,
    LemmaWeights,
    besov_norm_dyadic,
    besov_seminorm_integral,
    compute_G,
    decay_slope,
    equivalence_report,
    filtered_operator_norm,
    lemma32_upper_bound,
    theorem42_lower_margin,
)
from .calculus import (
    DEFAULT_CHEBYSHEV_DEGREE,
    DEFAULT_SEMIGROUP_C,
    bandlimited_signal,
    calderon_reconstruct,
    calderon_reconstruct_chebyshev,
    filter_bank_apply,
    filter_bank_apply_chebyshev,
)
from .errors import NumericalError, ValidationError
from .filters import DEFAULT_SHARPNESS, make_filter_bank, make_window_pair, verify_partition, windows_to_csv
from .operators import (
    DENSE_EIG_LIMIT,
    Signal,
    build_laplacian,
    eigendecompose,
    eigenvector_signal,
    load_operator,
    load_signal,
    random_signals,
    spectral_bound,
)

COMMANDS = ("decompose", "verify-frame", "besov", "equivalence", "diagnostics")

OUTDIR_ENV = "LPBESOV_OUTDIR"

# Fallback values used when neither a flag nor the config file sets a key.
DEFAULTS = {
    "format": "dense-csv",
    "size": 64,
    "shift": 0.0,
    "seed": 0,
    "alpha": 1.0,
    "q": math.inf,
    "sharpness": DEFAULT_SHARPNESS,
    "backend": "exact",
    "degree": DEFAULT_CHEBYSHEV_DEGREE,
    "semigroup_c": DEFAULT_SEMIGROUP_C,
    "grid_points": 10000,
    "s_points": 512,
    "tau_samples": 16,
    "experimental": False,
    "no_plots": False,
    "random": None,
    "label": "run",
}


@dataclass
class RunConfig:
    """Resolved configuration for one command invocation."""

    command: str
    operator_path: str | None = None
    operator_format: str = "dense-csv"
    generate: str | None = None
    size: int = 64
    shift: float = 0.0
    lambda_max: float | None = None
    signal_paths: list = field(default_factory=list)
    eigenvector_indices: list = field(default_factory=list)
    random_count: int | None = None
    band: tuple | None = None
    seed: int = 0
    params: BesovParams | None = None
    sharpness: float = DEFAULT_SHARPNESS
    backend: str = "exact"
    degree: int = DEFAULT_CHEBYSHEV_DEGREE
    semigroup_c: float = DEFAULT_SEMIGROUP_C
    grid_points: int = 10000
    outdir: str = "."
    label: str = "run"
    plots: bool = True

    def as_dict(self):
        return {
            "command": self.command,
            "operator_path": self.operator_path,
            "operator_format": self.operator_format,
            "generate": self.generate,
            "size": self.size,
            "shift": self.shift,
            "lambda_max": self.lambda_max,
            "signal_paths": list(self.signal_paths),
            "eigenvector_indices": list(self.eigenvector_indices),
            "random_count": self.random_count,
            "band": list(self.band) if self.band else None,
            "seed": self.seed,
            "params": self.params.as_dict() if self.params else None,
            "sharpness": self.sharpness,
            "backend": self.backend,
            "degree": self.degree,
            "semigroup_c": self.semigroup_c,
            "grid_points": self.grid_points,
            "outdir": self.outdir,
            "label": self.label,
            "plots": self.plots,
        }


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lpbesov",
        description="Littlewood-Paley / Besov analysis of self-adjoint operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; explicit flags win on conflict")
        p.add_argument("--operator", help="operator file path")
        p.add_argument(
            "--format",
            choices=["matrix-market", "dense-csv", "diagonal-csv"],
            help="operator file format",
        )
        p.add_argument(
            "--generate", choices=["path", "cycle", "grid2d"], help="generate a test-bed Laplacian"
        )
        p.add_argument("--size", type=int, help="generator size (nodes or grid side)")
        p.add_argument("--shift", type=float, help="add shift*I for strict positivity")
        p.add_argument("--lambda-max", dest="lambda_max", type=float,
                       help="spectral cap (verify-frame without an operator)")
        p.add_argument("--signal", action="append", help="signal file (repeatable)")
        p.add_argument("--eigenvector", action="append", type=int,
                       help="eigenvector index signal (repeatable)")
        p.add_argument("--random", type=int, help="number of random signals")
        p.add_argument("--band", nargs=2, type=float, metavar=("A", "B"),
                       help="project random signals onto PW_[A,B]")
        p.add_argument("--seed", type=int, help="RNG seed, recorded in reports")
        p.add_argument("--alpha", type=float, help="smoothness exponent")
        p.add_argument("--q", help="aggregation exponent (number or 'inf')")
        p.add_argument("--r", type=int, help="difference order")
        p.add_argument("--s-min", dest="s_min", type=float, help="lower cutoff of the s grid")
        p.add_argument("--s-points", dest="s_points", type=int, help="points in the s grid")
        p.add_argument("--tau-samples", dest="tau_samples", type=int,
                       help="tau samples for the modulus sup cross-check")
        p.add_argument("--experimental", action="store_const", const=True,
                       help="allow alpha <= 1/2 and q < 1 (no equivalence contract)")
        p.add_argument("--sharpness", type=float, help="window transition sharpness")
        p.add_argument("--backend", choices=["exact", "chebyshev"], help="calculus backend")
        p.add_argument("--degree", type=int, help="Chebyshev degree")
        p.add_argument("--semigroup-c", dest="semigroup_c", type=float,
                       help="semigroup constant c in u(xi)=exp(-c xi)")
        p.add_argument("--grid-points", dest="grid_points", type=int,
                       help="grid points for verify-frame")
        p.add_argument("--outdir", help=f"output directory (default ${OUTDIR_ENV} or '.')")
        p.add_argument("--label", help="run label used in report filenames' header")
        p.add_argument("--no-plots", dest="no_plots", action="store_const", const=True,
                       help="skip figure rendering")
    return parser


def _merge(args, key):
    """Flag value, else config-file value, else hard default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if args._config_data and key in args._config_data:
        return args._config_data[key]
    return DEFAULTS.get(key)


def _parse_q(raw):
    if raw is None:
        return DEFAULTS["q"]
    if isinstance(raw, (int, float)):
        return float(raw)
    text = str(raw).strip().lower()
    if text in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"q must be a number or 'inf', got {raw!r}") from exc


def resolve_config(args):
    """Merge flags and config file into a validated RunConfig."""
    args._config_data = {}
    if args.config:
        if not os.path.exists(args.config):
            raise ValidationError(f"config file not found: {args.config}")
        with open(args.config) as fh:
            try:
                args._config_data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config file is not valid JSON: {exc}") from exc

    params = BesovParams(
        alpha=float(_merge(args, "alpha")),
        q=_parse_q(_merge(args, "q")),
        r=_merge(args, "r"),
        s_min=_merge(args, "s_min"),
        s_points=int(_merge(args, "s_points")),
        tau_samples=int(_merge(args, "tau_samples")),
        experimental=bool(_merge(args, "experimental")),
    )
    outdir = _merge(args, "outdir") or os.environ.get(OUTDIR_ENV) or "."
    band = _merge(args, "band")
    cfg = RunConfig(
        command=args.command,
        operator_path=_merge(args, "operator"),
        operator_format=_merge(args, "format"),
        generate=_merge(args, "generate"),
        size=int(_merge(args, "size")),
        shift=float(_merge(args, "shift")),
        lambda_max=_merge(args, "lambda_max"),
        signal_paths=_merge(args, "signal") or [],
        eigenvector_indices=_merge(args, "eigenvector") or [],
        random_count=_merge(args, "random"),
        band=tuple(band) if band else None,
        seed=int(_merge(args, "seed")),
        params=params,
        sharpness=float(_merge(args, "sharpness")),
        backend=_merge(args, "backend"),
        degree=int(_merge(args, "degree")),
        semigroup_c=float(_merge(args, "semigroup_c")),
        grid_points=int(_merge(args, "grid_points")),
        outdir=str(outdir),
        label=str(_merge(args, "label")),
        plots=not bool(_merge(args, "no_plots")),
    )
    if cfg.backend not in ("exact", "chebyshev"):
        raise ValidationError(f"unknown backend {cfg.backend!r}")
    if cfg.command != "verify-frame" or cfg.lambda_max is None:
        if not cfg.operator_path and not cfg.generate:
            raise ValidationError("an operator is required: --operator/--format or --generate")
    if cfg.operator_path and cfg.generate:
        raise ValidationError("give either --operator or --generate, not both")
    os.makedirs(cfg.outdir, exist_ok=True)
    return cfg


def _load_operator(cfg):
    if cfg.generate:
        op = build_laplacian(cfg.generate, cfg.size)
    else:
        op = load_operator(cfg.operator_path, cfg.operator_format)
    if cfg.shift:
        op = op.shifted(cfg.shift)
    return op


def _operator_provenance(op, bound, bank=None):
    info = {"source": op.source, "kind": op.kind, "n": op.n, "spectral_bound": bound}
    if bank is not None:
        info["J"] = bank.J
    return info


def _resolve_signals(cfg, op, decomp):
    """Materialize the signal suite; defaults to seeded random signals."""
    signals = [load_signal(p) for p in cfg.signal_paths]
    for idx in cfg.eigenvector_indices:
        if decomp is None:
            raise ValidationError("eigenvector signals need the exact backend")
        signals.append(eigenvector_signal(decomp, idx))
    count = cfg.random_count
    if count is None and not signals:
        count = 50 if cfg.command == "equivalence" else 1
    if count:
        if cfg.band is not None:
            if decomp is None:
                raise ValidationError("bandlimited signals need the exact backend")
            a, b = cfg.band
            signals.extend(
                bandlimited_signal(decomp, a, b, seed=cfg.seed + i, label=f"bandlimited[{i}]")
                for i in range(count)
            )
        else:
            signals.extend(random_signals(op.n, count, seed=cfg.seed))
    for s in signals:
        if len(s) != op.n:
            raise ValidationError(
                f"signal {s.label!r} has length {len(s)}, operator dimension is {op.n}"
            )
    if not signals:
        raise ValidationError("no signals specified")
    return signals


def _report_skeleton(cfg, operator_info):
    return {
        "command": cfg.command,
        "version": __version__,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": cfg.as_dict(),
        "operator": operator_info,
    }


def _write_json(path, payload):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_csv(path, header, rows):
    buf = []
    writer_target = _StringList(buf)
    writer = csv.writer(writer_target)
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(path, "".join(buf))


class _StringList:
    def __init__(self, buf):
        self.buf = buf

    def write(self, text):
        self.buf.append(text)


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _finite(x):
    """Reports carry finite numbers or explicit tags, never NaN/inf."""
    if x is None:
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return "divergent" if x > 0 else "-divergent"
    return x


def _exact_setup(cfg, op):
    if op.n > DENSE_EIG_LIMIT:
        raise ValidationError(
            f"backend=exact requires n <= {DENSE_EIG_LIMIT}; use --backend chebyshev"
        )
    decomp = eigendecompose(op)
    bound = spectral_bound(op)
    bank = make_filter_bank(make_window_pair(cfg.sharpness), max(bound, decomp.lambda_max))
    return decomp, bound, bank


# ---------------------------------------------------------------------------
# command handlers


def cmd_verify_frame(cfg):
    if cfg.lambda_max is not None and not cfg.operator_path and not cfg.generate:
        bound = float(cfg.lambda_max)
        operator_info = {"source": "none", "kind": "analytic", "n": None, "spectral_bound": bound}
    else:
        op = _load_operator(cfg)
        bound = spectral_bound(op)
        operator_info = _operator_provenance(op, bound)
    bank = make_filter_bank(make_window_pair(cfg.sharpness), bound)
    deviation = verify_partition(bank, cfg.grid_points)
    operator_info["J"] = bank.J
    report = _report_skeleton(cfg, operator_info)
    report["results"] = {
        "max_deviation": deviation,
        "grid_points": cfg.grid_points,
        "J": bank.J,
        "lambda_max": bank.lambda_max,
        "sharpness": cfg.sharpness,
    }
    outdir = cfg.outdir
    _write_json(os.path.join(outdir, "verify-frame_report.json"), report)
    windows_to_csv(bank, os.path.join(outdir, "windows.csv"))
    if cfg.plots:
        plotting.plot_windows(bank, os.path.join(outdir, "fig_windows.png"))
    return report


def cmd_decompose(cfg):
    op = _load_operator(cfg)
    bound = spectral_bound(op)
    if cfg.backend == "exact":
        decomp, bound, bank = _exact_setup(cfg, op)
    else:
        decomp = None
        bank = make_filter_bank(make_window_pair(cfg.sharpness), bound)
    signals = _resolve_signals(cfg, op, decomp)
    results = []
    band_rows = []
    outdir = cfg.outdir
    for i, sig in enumerate(signals):
        if cfg.backend == "exact":
            comps = filter_bank_apply(decomp, bank, sig)
            recon = calderon_reconstruct(decomp, bank, sig)
        else:
            comps = filter_bank_apply_chebyshev(op, bank, sig, cfg.degree)
            recon = calderon_reconstruct_chebyshev(op, bank, sig, cfg.degree)
        nf = comps.source_norm
        rel_err = float(np.linalg.norm(recon - sig.values) / nf) if nf > 0 else 0.0
        norms = comps.band_norms()
        results.append(
            {
                "label": sig.label,
                "band_norms": norms.tolist(),
                "energy_ratio": comps.energy_ratio(),
                "reconstruction_rel_error": rel_err,
            }
        )
        comps.to_csv(os.path.join(outdir, f"bands_{i}.csv"))
        band_rows.append((sig.label, norms))
    report = _report_skeleton(cfg, _operator_provenance(op, bound, bank))
    report["results"] = {"signals": results, "J": bank.J}
    _write_json(os.path.join(outdir, "decompose_report.json"), report)
    _write_csv(
        os.path.join(outdir, "decompose_report.csv"),
        ["label", "band", "band_norm", "energy_ratio", "reconstruction_rel_error"],
        [
            [res["label"], j, bn, res["energy_ratio"], res["reconstruction_rel_error"]]
            for res in results
            for j, bn in enumerate(res["band_norms"])
        ],
    )
    if cfg.plots:
        plotting.plot_band_energies(band_rows, os.path.join(outdir, "fig_bands.png"))
        plotting.plot_windows(bank, os.path.join(outdir, "fig_windows.png"))
    return report


def _require_exact(cfg):
    if cfg.backend != "exact":
        raise ValidationError(
            f"command {cfg.command!r} requires --backend exact "
            "(norms need the full eigendecomposition)"
        )


def cmd_besov(cfg):
    _require_exact(cfg)
    cfg.params.validate()
    op = _load_operator(cfg)
    decomp, bound, bank = _exact_setup(cfg, op)
    signals = _resolve_signals(cfg, op, decomp)
    results = []
    rows = []
    for sig in signals:
        integral = besov_seminorm_integral(decomp, sig, cfg.params, cfg.semigroup_c)
        dyadic = besov_norm_dyadic(decomp, bank, sig, cfg.params)
        nf = sig.norm()
        results.append(
            {
                "label": sig.label,
                "signal_norm": nf,
                "integral_term": integral.as_dict(),
                "dyadic_term": dyadic.as_dict(),
                "integral_side": nf + integral.value,
                "dyadic_side": dyadic.total,
            }
        )
        rows.append(
            [
                sig.label,
                cfg.params.alpha,
                "inf" if math.isinf(cfg.params.q) else cfg.params.q,
                cfg.params.r,
                nf,
                nf + integral.value,
                dyadic.total,
                integral.divergent,
                integral.exact_zero,
            ]
        )
    report = _report_skeleton(cfg, _operator_provenance(op, bound, bank))
    report["results"] = {"signals": results}
    outdir = cfg.outdir
    _write_json(os.path.join(outdir, "besov_report.json"), report)
    _write_csv(
        os.path.join(outdir, "besov_report.csv"),
        ["label", "alpha", "q", "r", "signal_norm", "integral_side", "dyadic_side",
         "divergent", "exact_zero"],
        rows,
    )
    if cfg.plots:
        band_rows = [(r["label"], np.array(r["dyadic_term"]["per_band"])) for r in results]
        plotting.plot_band_energies(band_rows, os.path.join(outdir, "fig_bands.png"))
    return report


def cmd_equivalence(cfg):
    _require_exact(cfg)
    cfg.params.validate_for_equivalence()
    op = _load_operator(cfg)
    decomp, bound, bank = _exact_setup(cfg, op)
    signals = _resolve_signals(cfg, op, decomp)
    reports = [
        equivalence_report(decomp, bank, sig, cfg.params, cfg.semigroup_c) for sig in signals
    ]
    ratios = [r.ratio for r in reports if not r.zero_signal]
    summary = {
        "n_signals": len(reports),
        "min_ratio": min(ratios) if ratios else None,
        "max_ratio": max(ratios) if ratios else None,
        "spread": (max(ratios) / min(ratios)) if ratios else None,
        "divergent_count": sum(1 for r in reports if r.integral.divergent),
    }
    report = _report_skeleton(cfg, _operator_provenance(op, bound, bank))
    report["results"] = {"summary": summary, "reports": [r.as_dict() for r in reports]}
    outdir = cfg.outdir
    _write_json(os.path.join(outdir, "equivalence_report.json"), report)
    _write_csv(
        os.path.join(outdir, "equivalence_report.csv"),
        ["label", "alpha", "q", "r", "signal_norm", "integral_side", "dyadic_side", "ratio",
         "divergent", "decay_slope"],
        [
            [
                r.label,
                cfg.params.alpha,
                "inf" if math.isinf(cfg.params.q) else cfg.params.q,
                cfg.params.r,
                r.signal_norm,
                r.integral_side,
                r.dyadic_side,
                r.ratio,
                r.integral.divergent,
                "exact-zero" if r.decay.exact_zero else r.decay.slope,
            ]
            for r in reports
        ],
    )
    if cfg.plots:
        plotting.plot_equivalence(reports, os.path.join(outdir, "fig_equivalence.png"))
    return report


def cmd_diagnostics(cfg):
    _require_exact(cfg)
    cfg.params.validate()
    op = _load_operator(cfg)
    decomp, bound, bank = _exact_setup(cfg, op)
    signals = _resolve_signals(cfg, op, decomp)
    sig = signals[0]

    s_grid = [2.0**-i for i in range(0, 11)]
    bound_rows = [
        filtered_operator_norm(bank, j, r, s, decomp=decomp, c=cfg.semigroup_c).as_dict()
        for j in bank.levels
        for r in (1, 2, 3)
        for s in s_grid
    ]
    lemma = lemma32_upper_bound(decomp, bank, sig, cfg.params, c=cfg.semigroup_c)
    g_params = GFunctionParams(alpha=cfg.params.alpha, r=cfg.params.r)
    g_values = [
        {"lambda": 2.0**j, "G": compute_G(g_params, 2.0**j, cfg.semigroup_c)}
        for j in bank.levels
    ]
    margins = [
        m.as_dict()
        for m in theorem42_lower_margin(decomp, bank, sig, cfg.params, g_params, cfg.semigroup_c)
    ]
    s_fit = np.logspace(-4, -1, 25)
    decays = [
        {"label": s.label, **decay_slope(decomp, s, r, s_fit, cfg.semigroup_c).as_dict()}
        for s in signals
        for r in (1, 2, 3)
    ]
    report = _report_skeleton(cfg, _operator_provenance(op, bound, bank))
    report["results"] = {
        "operator_norm_bounds": bound_rows,
        "lemma_upper_bound": lemma.as_dict(),
        "g_function": {"params": g_params.as_dict(), "values": g_values},
        "lower_bound_margins": margins,
        "decay_fits": decays,
    }
    outdir = cfg.outdir
    _write_json(os.path.join(outdir, "diagnostics_report.json"), report)
    _write_csv(
        os.path.join(outdir, "diagnostics_report.csv"),
        ["j", "r", "s", "value", "margin_elementary", "margin_band_scaled"],
        [[b["j"], b["r"], b["s"], b["value"], b["margin_elementary"], b["margin_band_scaled"]]
         for b in bound_rows],
    )
    if cfg.plots:
        plotting.plot_diagnostics(bound_rows, margins, os.path.join(outdir, "fig_diagnostics.png"))
    return report


HANDLERS = {
    "decompose": cmd_decompose,
    "verify-frame": cmd_verify_frame,
    "besov": cmd_besov,
    "equivalence": cmd_equivalence,
    "diagnostics": cmd_diagnostics,
}


def _error_payload(kind, exc):
    return {"error": {"kind": kind, "type": type(exc).__name__, "message": str(exc)}}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ValidationError as exc:
        print(json.dumps(_error_payload("config", exc)), file=sys.stdout)
        return 2
    try:
        HANDLERS[cfg.command](cfg)
    except ValidationError as exc:
        print(json.dumps(_error_payload("config", exc)), file=sys.stdout)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        partial = _report_skeleton(cfg, {"source": "unavailable"})
        partial["partial"] = True
        partial.update(_error_payload("numeric", exc))
        try:
            _write_json(os.path.join(cfg.outdir, f"{cfg.command}_report.json"), partial)
        except OSError:
            pass
        print(json.dumps(_error_payload("numeric", exc)), file=sys.stdout)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
