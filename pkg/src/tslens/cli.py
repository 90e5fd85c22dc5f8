"""Command-line driver: load data, pick a model, emit explanation artifacts.

Commands: explain-step, explain-matrix, explain-summary, explain-channels,
bench, forecast.  Model specs are single strings ("builtin:naive",
"builtin:seasonal-naive:<k>", "builtin:linear[:lambda]",
"extern:<command line>").  Outputs are byte-deterministic; errors go to
stderr as one JSON object and a nonzero exit code.
"""

import argparse
import shlex
import sys
from dataclasses import replace

import numpy as np

from . import render
from .bridge import BridgedForecaster, bridge_spawn
from .engine import (
    AnalysisConfig,
    aggregate_importance,
    cross_channel,
    dependency_matrix,
    summary_matrix,
)
from .forecasters import NaiveForecaster, SeasonalNaiveForecaster, fit_linear_ar
from .metrics import attach_reference, evaluate_forecaster
from .patterns import classify_matrix
from .perturb import PerturbationSpec, apply_perturbation
from .properties import Property, parse_property_token
from .series import ScalingStats, SplitSpec, load_csv, make_windows, split, standardize

MODEL_GRAMMAR = ("builtin:naive | builtin:seasonal-naive:<k> | builtin:linear[:lambda] "
                 "| extern:<command line>")
PERTURB_TARGETS = ("min", "max", "mean", "var", "trend", "step:<t>")


class UsageError(ValueError):
    """Bad flags or tokens; reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # machine-readable instead of usage text
        raise UsageError(message)


# -- flag parsing ----------------------------------------------------------


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"bad {what} {text!r}: expected comma-separated numbers") from None


def _parse_split(text: str) -> SplitSpec:
    values = _parse_floats(text, "split")
    if len(values) != 3:
        raise UsageError(f"--split needs three ratios, got {text!r}")
    try:
        return SplitSpec(ratios=values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_scales(text: str) -> tuple[float, ...]:
    return _parse_floats(text, "scales")


_CONFIG_KEYS = {
    "data": str, "model": str, "lookback": int, "horizon": int, "stride": int,
    "split": str, "scales": str, "width": int, "softness": float,
    "seasonality": int, "trend_anchor": str, "property": str,
    "from_channel": int, "to_channel": int, "format": str, "out": str,
    "jobs": int, "window_index": int, "perturb": str,
}


def load_config_file(path: str) -> dict:
    """Flat key=value file mirroring the long flag names; flags win."""
    defaults = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
        converter = _CONFIG_KEYS[key]
        try:
            defaults[key] = converter(value)
        except ValueError:
            raise UsageError(f"{path}:{line_no}: bad value {value!r} for {key!r}") from None
    return defaults


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = _Parser(
        prog="tslens",
        description="Perturbation-based explanations for time-series forecasters.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subparsers = []

    def common(p, multi_model=False):
        p.add_argument("--config", help="flat key=value file mirroring these flags")
        p.add_argument("--data", required=False, help="CSV file, one column per channel")
        if multi_model:
            p.add_argument("--model", action="append", default=None,
                           help=f"model spec ({MODEL_GRAMMAR}); repeatable")
        else:
            p.add_argument("--model", help=f"model spec ({MODEL_GRAMMAR})")
        p.add_argument("--lookback", type=int, default=20)
        p.add_argument("--horizon", type=int, default=20)
        p.add_argument("--stride", type=int, default=1)
        p.add_argument("--split", default="0.7,0.1,0.2")
        p.add_argument("--scales", default="-0.1,-0.05,-0.01,0.01,0.05,0.1")
        p.add_argument("--width", type=int, default=2)
        p.add_argument("--softness", type=float, default=1.0)
        p.add_argument("--seasonality", type=int, default=1)
        p.add_argument("--trend-anchor", default="left", choices=("left", "symmetric", "right"))
        p.add_argument("--from-channel", type=int, default=None)
        p.add_argument("--to-channel", type=int, default=None)
        p.add_argument("--format", default="json", choices=("json", "csv", "svg"))
        p.add_argument("--out", default=None)
        p.add_argument("--jobs", type=int, default=1)
        sel = p.add_mutually_exclusive_group()
        sel.add_argument("--window-index", type=int, default=None)
        sel.add_argument("--aggregate", action="store_true", default=False)

    p = sub.add_parser("explain-step", help="per-input-step importance of one output property")
    common(p)
    p.add_argument("--property", default="mean",
                   help="output property token: min max mean var trend step:<n> [@channel]")
    subparsers.append(p)

    p = sub.add_parser("explain-matrix", help="input step x forecast step dependency matrix")
    common(p)
    subparsers.append(p)

    p = sub.add_parser("explain-summary", help="input statistic x output property matrix")
    common(p)
    subparsers.append(p)

    p = sub.add_parser("explain-channels", help="cross-channel correlation matrix and graph")
    common(p)
    subparsers.append(p)

    p = sub.add_parser("bench", help="error metrics and pattern labels per model")
    common(p, multi_model=True)
    subparsers.append(p)

    p = sub.add_parser("forecast", help="forecast one window, optionally after a perturbation")
    common(p)
    p.add_argument("--perturb", default=None,
                   help="perturbation token <target>:<alpha>, target in "
                        + " ".join(PERTURB_TARGETS))
    subparsers.append(p)

    if defaults:
        for p in subparsers:
            p.set_defaults(**defaults)
    return parser


# -- pipeline --------------------------------------------------------------


def build_model(spec: str, train, lookback: int, horizon: int, channels: int):
    if not spec:
        raise UsageError(f"missing --model; grammar: {MODEL_GRAMMAR}")
    parts = spec.split(":", 1)
    kind = parts[0]
    rest = parts[1] if len(parts) > 1 else ""
    try:
        if kind == "builtin":
            sub = rest.split(":")
            if sub[0] == "naive" and len(sub) == 1:
                return NaiveForecaster(lookback, horizon, channels)
            if sub[0] == "seasonal-naive" and len(sub) == 2:
                return SeasonalNaiveForecaster(lookback, horizon, int(sub[1]), channels)
            if sub[0] == "linear" and len(sub) <= 2:
                lam = float(sub[1]) if len(sub) == 2 else 1e-6
                return fit_linear_ar(train, lookback, horizon, ridge_lambda=lam)
            raise UsageError(f"unknown model spec {spec!r}; grammar: {MODEL_GRAMMAR}")
        if kind == "extern":
            command = shlex.split(rest)
            if not command:
                raise UsageError("extern model needs a command line")
            return bridge_spawn(command, lookback, horizon, channels)
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad model spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown model spec {spec!r}; grammar: {MODEL_GRAMMAR}")


class Run:
    """Loaded data, fitted scaling, test windows, and the analysis config."""

    def __init__(self, args):
        if not args.data:
            raise UsageError("missing --data")
        self.args = args
        self.series = load_csv(args.data)
        self.analysis = AnalysisConfig(
            scales=_parse_scales(args.scales),
            width=args.width,
            softness=args.softness,
            seasonality=args.seasonality,
            trend_anchor=args.trend_anchor,
        )
        split_spec = _parse_split(args.split)
        train, _val, test = split(self.series, split_spec, min_segment=args.lookback + args.horizon)
        self.stats = ScalingStats.from_series(train)
        self.train = standardize(train, self.stats)
        self.test = standardize(test, self.stats)
        self.windows = make_windows(self.test, args.lookback, args.horizon, args.stride)
        if args.window_index is not None:
            if not 0 <= args.window_index < len(self.windows):
                raise UsageError(
                    f"--window-index {args.window_index} out of range 0..{len(self.windows) - 1}"
                )
            self.selected = [self.windows[args.window_index]]
        else:
            self.selected = self.windows

    @property
    def d(self) -> int:
        return self.series.d

    def model(self, spec: str | None = None):
        return build_model(spec if spec is not None else self.args.model, self.train,
                           self.args.lookback, self.args.horizon, self.d)

    def channel_pair(self):
        """Resolve --from-channel/--to-channel into a (source, target) pair."""
        src, tgt = self.args.from_channel, self.args.to_channel
        if (src is None) != (tgt is None):
            raise UsageError("--from-channel and --to-channel must be given together")
        if src is None:
            if self.d > 1:
                raise UsageError(f"data has {self.d} channels; pass --from-channel and --to-channel")
            return 0, 0
        for name, value in (("--from-channel", src), ("--to-channel", tgt)):
            if not 0 <= value < self.d:
                raise UsageError(f"{name} {value} out of range 0..{self.d - 1}")
        return src, tgt


def _close_model(model) -> None:
    if isinstance(model, BridgedForecaster):
        model.close()


def _write_artifact(args, artifact: dict, csv_text: str | None, svg_text: str | None) -> None:
    json_text = render.dumps_canonical(artifact)
    if args.format == "json":
        _write_out(args.out, json_text)
    elif args.format == "csv":
        if csv_text is None:
            raise UsageError(f"{args.command} has no csv form; use json")
        _write_out(args.out, csv_text)
    else:
        if svg_text is None:
            raise UsageError(f"{args.command} has no svg form; use json")
        if not args.out:
            raise UsageError("--format svg needs --out (an .svg path)")
        _write_out(args.out, svg_text)
        sibling = args.out.rsplit(".", 1)[0] + ".json"
        _write_out(sibling, json_text)


def _write_out(out: str | None, text: str) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------


def _parse_output_property(run: Run, token: str) -> Property:
    try:
        prop = parse_property_token(token)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if prop.target_channel is None and run.args.to_channel is not None:
        prop = replace(prop, target_channel=run.args.to_channel)
    if run.d > 1 and prop.target_channel is None:
        raise UsageError(f"data has {run.d} channels; add @<channel> to the property "
                         "or pass --to-channel")
    return prop


def cmd_explain_step(run: Run) -> None:
    args = run.args
    prop = _parse_output_property(run, args.property)
    source = args.from_channel
    if run.d > 1 and source is None:
        raise UsageError(f"data has {run.d} channels; pass --from-channel for the perturbed channel")
    model = run.model()
    try:
        result = aggregate_importance(model, run.selected, prop, run.analysis,
                                      source_channel=source, jobs=args.jobs)
    finally:
        _close_model(model)
    artifact = {
        "kind": "timestep_importance",
        "model": model.name,
        "property": result.property_token,
        "lookback": args.lookback,
        "horizon": args.horizon,
        "sample_count": result.sample_count,
        "skipped": result.skipped,
        "values": result.values.tolist(),
    }
    csv_text = render.vector_csv(result.values)
    svg_text = render.svg_stemplot(result.values, title=f"{model.name}: importance for {result.property_token}")
    _write_artifact(args, artifact, csv_text, svg_text)


def cmd_explain_matrix(run: Run) -> None:
    args = run.args
    source, target = run.channel_pair()
    model = run.model()
    try:
        matrix = dependency_matrix(model, run.selected, run.analysis,
                                   source_channel=source, target_channel=target, jobs=args.jobs)
    finally:
        _close_model(model)
    label = classify_matrix(matrix, k=run.analysis.seasonality, band=run.analysis.width)
    artifact = {
        "kind": "dependency_matrix",
        "model": model.name,
        "source_channel": source,
        "target_channel": target,
        "row_labels": list(matrix.row_labels),
        "col_labels": list(matrix.col_labels),
        "sample_count": matrix.sample_count,
        "skipped": matrix.skipped,
        "pattern": label.to_json_dict(),
        "values": matrix.values.tolist(),
    }
    csv_text = render.matrix_csv(matrix.values, matrix.row_labels, matrix.col_labels, corner="t\\n")
    svg_text = render.svg_heatmap(matrix.values, matrix.row_labels, matrix.col_labels,
                                  title=f"{model.name}: input step x forecast step")
    _write_artifact(args, artifact, csv_text, svg_text)


def cmd_explain_summary(run: Run) -> None:
    args = run.args
    source = None
    output_channel = None
    if run.d > 1:
        source, output_channel = run.channel_pair()
    output_props = [Property(kind=k, target_channel=output_channel)
                    for k in ("min", "max", "mean", "variance", "trend")]
    model = run.model()
    try:
        matrix = summary_matrix(model, run.selected, output_props=output_props,
                                config=run.analysis, source_channel=source, jobs=args.jobs)
    finally:
        _close_model(model)
    artifact = {
        "kind": "summary_matrix",
        "model": model.name,
        "source_channel": source,
        "row_labels": list(matrix.row_labels),
        "col_labels": list(matrix.col_labels),
        "sample_count": matrix.sample_count,
        "skipped": matrix.skipped,
        "values": matrix.values.tolist(),
    }
    csv_text = render.matrix_csv(matrix.values, matrix.row_labels, matrix.col_labels, corner="input\\output")
    svg_text = render.svg_heatmap(matrix.values, matrix.row_labels, matrix.col_labels,
                                  title=f"{model.name}: input statistic x output property")
    _write_artifact(args, artifact, csv_text, svg_text)


def cmd_explain_channels(run: Run) -> None:
    args = run.args
    if run.d < 2:
        raise UsageError("cross-channel analysis needs multivariate data (d > 1)")
    model = run.model()
    try:
        matrix = cross_channel(model, run.selected, run.analysis,
                               channel_names=run.series.channel_names, jobs=args.jobs)
    finally:
        _close_model(model)
    artifact = {
        "kind": "cross_channel",
        "model": model.name,
        "channel_names": list(matrix.channel_names),
        "sample_count": matrix.sample_count,
        "skipped": matrix.skipped,
        "values": matrix.values.tolist(),
    }
    csv_text = render.matrix_csv(matrix.values, matrix.channel_names, matrix.channel_names,
                                 corner="from\\to")
    svg_text = render.svg_channel_graph(matrix.values, matrix.channel_names,
                                        title=f"{model.name}: cross-channel correlation")
    _write_artifact(args, artifact, csv_text, svg_text)


def cmd_bench(run: Run) -> None:
    args = run.args
    specs = args.model or []
    if isinstance(specs, str):  # single spec supplied via config file
        specs = [specs]
    if not specs:
        raise UsageError("bench needs at least one --model")
    if args.format == "svg":
        raise UsageError("bench supports json or csv output")
    reference_model = NaiveForecaster(args.lookback, args.horizon, run.d)
    reference = evaluate_forecaster(reference_model, run.selected, run.train)
    source, target = (0, 0) if run.d > 1 else (None, None)
    rows = []
    for spec in specs:
        model = run.model(spec)
        try:
            report = evaluate_forecaster(model, run.selected, run.train)
            attach_reference(report, reference, reference_model.name)
            matrix = dependency_matrix(model, run.selected, run.analysis,
                                       source_channel=source, target_channel=target, jobs=args.jobs)
        finally:
            _close_model(model)
        label = classify_matrix(matrix, k=run.analysis.seasonality, band=run.analysis.width)
        row = {"model": spec}
        row.update(report.to_json_dict())
        row["pattern"] = label.label
        rows.append(row)
    artifact = {"kind": "benchmark", "reference": reference_model.name, "rows": rows}
    _print_bench_table(rows)
    csv_lines = ["model,mae,mse,smape,mase,owa,e_norm,pattern"]
    for row in rows:
        cells = [row["model"]]
        for key in ("mae", "mse", "smape", "mase", "owa", "e_norm"):
            cells.append("" if row[key] is None else render.format_float(row[key]))
        cells.append(row["pattern"])
        csv_lines.append(",".join(cells))
    _write_artifact(args, artifact, "\n".join(csv_lines) + "\n", None)


def _print_bench_table(rows) -> None:
    headers = ("model", "mae", "mse", "smape", "mase", "owa", "e_norm", "pattern")
    table = [headers]
    for row in rows:
        cells = [row["model"]]
        for key in headers[1:-1]:
            cells.append("-" if row[key] is None else f"{row[key]:.4g}")
        cells.append(row["pattern"])
        table.append(tuple(cells))
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    for r in table:
        line = "  ".join(cell.ljust(width) for cell, width in zip(r, widths))
        print(line.rstrip(), file=sys.stderr)


def parse_perturb_token(token: str, x: np.ndarray, channel: int | None,
                        config: AnalysisConfig) -> PerturbationSpec:
    """Parse "<target>:<alpha>" into a spec, resolving min/max to an index."""
    head, sep, alpha_text = token.rpartition(":")
    if not sep or not head:
        raise UsageError(f"bad perturb token {token!r}; expected <target>:<alpha> with target in "
                         + " ".join(PERTURB_TARGETS))
    try:
        alpha = float(alpha_text)
    except ValueError:
        raise UsageError(f"bad scale in perturb token {token!r}") from None
    d = x.shape[0]
    if d > 1 and channel is None:
        raise UsageError(f"data has {d} channels; pass --from-channel for the perturbed channel")
    row = x[channel if channel is not None else 0]
    index_kwargs = dict(w=config.width, s=config.softness, epsilon=config.epsilon)
    try:
        if head == "min":
            return PerturbationSpec(family="index", alpha=alpha, t=int(np.argmin(row)) + 1,
                                    channel=channel, **index_kwargs)
        if head == "max":
            return PerturbationSpec(family="index", alpha=alpha, t=int(np.argmax(row)) + 1,
                                    channel=channel, **index_kwargs)
        if head == "mean":
            return PerturbationSpec(family="mean", alpha=alpha, channel=channel)
        if head == "var":
            return PerturbationSpec(family="variance", alpha=alpha, channel=channel)
        if head == "trend":
            return PerturbationSpec(family="trend", alpha=alpha, channel=channel,
                                    k=config.seasonality, anchor=config.trend_anchor)
        if head.startswith("step:"):
            return PerturbationSpec(family="index", alpha=alpha, t=int(head[len("step:"):]),
                                    channel=channel, **index_kwargs)
    except ValueError as exc:
        raise UsageError(f"bad perturb token {token!r}: {exc}") from None
    raise UsageError(f"unknown perturb target {head!r}; expected one of " + " ".join(PERTURB_TARGETS))


def cmd_forecast(run: Run) -> None:
    args = run.args
    index = args.window_index if args.window_index is not None else 0
    if not 0 <= index < len(run.windows):
        raise UsageError(f"--window-index {index} out of range 0..{len(run.windows) - 1}")
    window = run.windows[index]
    std = run.stats.effective_std()[:, None]
    mean = run.stats.mean[:, None]

    def to_raw(values: np.ndarray) -> np.ndarray:
        return values * std + mean

    model = run.model()
    try:
        yhat = model.predict(window.x)
        perturbed = None
        if args.perturb:
            spec = parse_perturb_token(args.perturb, window.x, args.from_channel, run.analysis)
            pw = apply_perturbation(window.x, spec)
            perturbed = (pw, model.predict(pw.x_prime))
    finally:
        _close_model(model)

    artifact = {
        "kind": "forecast",
        "model": model.name,
        "window_index": index,
        "origin_index": window.origin_index,
        "channel_names": list(run.series.channel_names),
        "input": to_raw(window.x).tolist(),
        "forecast": to_raw(yhat).tolist(),
    }
    if window.y is not None:
        artifact["ground_truth"] = to_raw(window.y).tolist()
    if perturbed is not None:
        pw, yhat_p = perturbed
        artifact["perturbation"] = {
            "token": args.perturb,
            "family": pw.spec.family,
            "alpha": pw.spec.alpha,
            "delta": pw.delta,
        }
        artifact["perturbed_input"] = to_raw(pw.x_prime).tolist()
        artifact["perturbed_forecast"] = to_raw(yhat_p).tolist()

    channel = args.from_channel if args.from_channel is not None else 0
    overlay = {"input": to_raw(window.x)[channel], "forecast": to_raw(yhat)[channel]}
    if perturbed is not None:
        overlay["perturbed input"] = to_raw(perturbed[0].x_prime)[channel]
        overlay["perturbed forecast"] = to_raw(perturbed[1])[channel]
    csv_text = _forecast_csv(run, artifact)
    svg_text = render.svg_forecast_overlay(overlay, title=f"{model.name}: window {index}")
    _write_artifact(args, artifact, csv_text, svg_text)


def _forecast_csv(run: Run, artifact: dict) -> str:
    names = artifact["channel_names"]
    columns = {f"{name}": np.asarray(artifact["forecast"])[c] for c, name in enumerate(names)}
    if "perturbed_forecast" in artifact:
        for c, name in enumerate(names):
            columns[f"{name}_perturbed"] = np.asarray(artifact["perturbed_forecast"])[c]
    lines = ["step," + ",".join(columns)]
    horizon = len(next(iter(columns.values())))
    for n in range(horizon):
        cells = [str(n + 1)] + [render.format_float(col[n]) for col in columns.values()]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# -- entry point -------------------------------------------------------------

_COMMANDS = {
    "explain-step": cmd_explain_step,
    "explain-matrix": cmd_explain_matrix,
    "explain-summary": cmd_explain_summary,
    "explain-channels": cmd_explain_channels,
    "bench": cmd_bench,
    "forecast": cmd_forecast,
}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(render.dumps_canonical({"error": kind, "message": message}))
    return code


def _merge_list_flags(argv: list[str]) -> list[str]:
    """Join "--scales -0.1,..." into one token so argparse keeps the value."""
    merged = []
    skip = False
    for i, token in enumerate(argv):
        if skip:
            skip = False
            continue
        if token in ("--scales", "--split") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            merged.append(f"{token}={argv[i + 1]}")
            skip = True
        else:
            merged.append(token)
    return merged


def main(argv=None) -> int:
    argv = _merge_list_flags(list(sys.argv[1:] if argv is None else argv))
    try:
        # pre-scan for --config so its values become parser defaults; flags win
        defaults = None
        if "--config" in argv:
            path = argv[argv.index("--config") + 1] if argv.index("--config") + 1 < len(argv) else None
            if path:
                defaults = load_config_file(path)
        args = build_parser(defaults).parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    try:
        run = Run(args)
        _COMMANDS[args.command](run)
        return 0
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except Exception as exc:  # surfaced as machine-readable diagnostics
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
