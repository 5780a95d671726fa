"""Experiment harness: plain-text configs, a small CLI, and file outputs.

Configs are `section.key = value` lines with full-line # comments.  Every
key is declared in the schema below; unknown keys fail naming the line.
Command-line --set overrides use the same syntax.  The CLI verbs map onto
the tasks train / test / sweep-noise / sweep-qubits / fit.

Every output file embeds the resolved configuration: CSVs carry it as
leading `# key = value` comment lines under a version line, JSON reports
carry "version" and "config" entries.  Files contain no timestamps and the
sweep drivers merge worker results in submission order, so reruns are
byte-identical, serial or parallel.  Writes go to a temp file in the target
directory and are renamed into place.

Exit codes: 0 success, 2 configuration error, 3 training divergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

from .analysis import (coefficients_vs_noise, fit_parameter_series, r2_vs_qubits)
from .dynamics import (MAX_QUBITS, MIN_QUBITS, ParameterSchedule, TimeGrid, propagate,
                       read_schedule, write_schedule)
from .errors import ConfigError, DivergenceError
from .learning import LearnConfig, train, write_report
from .noise import NoiseConfig, total_noise
from .qcore import QUBIT_LETTERS, outer_product
from .witness import (WitnessObservable, output_value, p_state_oracle, test_state_M,
                      test_state_P, training_set)

__version__ = "0.1.0"
VERSION_LINE = f"qnnsim {__version__}"

TASKS = ("train", "test", "sweep-noise", "sweep-qubits", "fit")

# The sweep over 4- and 5-qubit registers costs hours; it must be asked for.
LONG_RUN_LIMIT = 3


def _cast_float(text):
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None


def _cast_pos_float(text):
    v = _cast_float(text)
    if not v > 0:
        raise ValueError(f"expected a positive number, got {text!r}")
    return v


def _cast_nonneg_float(text):
    v = _cast_float(text)
    if v < 0:
        raise ValueError(f"expected a nonnegative number, got {text!r}")
    return v


def _cast_int(text):
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _cast_int_min(lo):
    def cast(text):
        v = _cast_int(text)
        if v < lo:
            raise ValueError(f"expected an integer >= {lo}, got {text!r}")
        return v
    return cast


def _cast_int_range(lo, hi):
    def cast(text):
        v = _cast_int(text)
        if not lo <= v <= hi:
            raise ValueError(f"expected an integer in [{lo}, {hi}], got {text!r}")
        return v
    return cast


def _cast_bool(text):
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    raise ValueError(f"expected true or false, got {text!r}")


def _cast_enum(*options):
    def cast(text):
        if text in options:
            return text
        raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
    return cast


def _cast_list(item_cast):
    def cast(text):
        parts = [p.strip() for p in text.split(",")]
        if parts == [""]:
            raise ValueError("expected a comma-separated list, got an empty value")
        return tuple(item_cast(p) for p in parts)
    return cast


def _cast_str(text):
    if not text:
        raise ValueError("expected a value")
    return text


def _cast_subset(text):
    letters = text.strip().upper()
    indices = []
    for ch in letters:
        if ch not in QUBIT_LETTERS:
            raise ValueError(f"expected qubit letters from {QUBIT_LETTERS}, got {text!r}")
        indices.append(QUBIT_LETTERS.index(ch))
    if len(indices) < 2 or indices != sorted(set(indices)):
        raise ValueError(f"expected >= 2 distinct ascending qubit letters, got {text!r}")
    return letters


# key -> (caster, default).  Order here is the canonical header order.
_SCHEMA = {
    "task": (_cast_enum(*TASKS), None),
    "n_qubits": (_cast_int_range(MIN_QUBITS, MAX_QUBITS), 2),
    "grid.t_final": (_cast_pos_float, 251.0),
    "grid.n_steps": (_cast_int_min(1), 251),
    "learn.rate": (_cast_pos_float, 1e-4),
    "learn.max_epochs": (_cast_int_min(1), 500),
    "learn.rms_stop": (_cast_nonneg_float, 1e-3),
    "learn.gradient_mode": (_cast_enum("adjoint", "finite-difference"), "adjoint"),
    "learn.fd_step": (_cast_pos_float, 1e-6),
    "learn.init_k": (_cast_float, 0.002),
    "learn.init_epsilon": (_cast_float, 0.0001),
    "learn.init_zeta": (_cast_float, 0.0002),
    "learn.init_jitter": (_cast_nonneg_float, 0.1),
    "noise.magnitude": (_cast_nonneg_float, 0.0),
    "noise.phase": (_cast_nonneg_float, 0.0),
    "noise.hamiltonian": (_cast_nonneg_float, 0.0),
    "noise.seed": (_cast_int_min(0), 0),
    "observable.subset": (_cast_subset, "BC"),
    "io.input": (_cast_str, None),
    "io.output": (_cast_str, None),
    "test.family": (_cast_enum("P", "M"), "P"),
    "test.gammas": (_cast_list(_cast_nonneg_float), (0.0, 0.25, 0.5, 0.75, 1.0)),
    "test.noise_levels": (_cast_list(_cast_nonneg_float), (0.0, 0.009)),
    "test.seeds": (_cast_list(_cast_int_min(0)), (0, 1, 2)),
    "sweep.noise_grid": (_cast_list(_cast_nonneg_float), (0.0, 0.009, 0.018, 0.027)),
    "sweep.seeds": (_cast_list(_cast_int_min(0)), (0, 1, 2)),
    "sweep.qubit_counts": (_cast_list(_cast_int_range(MIN_QUBITS, MAX_QUBITS)), (2, 3)),
    "sweep.channel": (_cast_enum("density", "hamiltonian"), "density"),
    "sweep.amplitude": (_cast_nonneg_float, 0.009),
    "sweep.long_run": (_cast_bool, False),
    "fit.order_k": (_cast_int_range(1, 8), 2),
    "fit.order_epsilon": (_cast_int_range(1, 8), 1),
    "fit.order_zeta": (_cast_int_range(1, 8), 1),
}


def parse_config_text(text: str) -> dict:
    """Raw `key = value` entries with their line numbers; no typing yet."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError("expected 'key = value'", line=lineno)
        if key in entries:
            raise ConfigError("duplicate key", field=key, line=lineno)
        entries[key] = (value, lineno)
    return entries


class ExperimentConfig:
    """Typed view of one resolved configuration."""

    def __init__(self, values: dict):
        self.values = values
        self.task = values["task"]
        self.n_qubits = values["n_qubits"]
        try:
            self.grid = TimeGrid(values["grid.t_final"], values["grid.n_steps"])
            self.learn = LearnConfig(
                rate=values["learn.rate"],
                max_epochs=values["learn.max_epochs"],
                rms_stop=values["learn.rms_stop"],
                gradient_mode=values["learn.gradient_mode"],
                fd_step=values["learn.fd_step"],
                init_k=values["learn.init_k"],
                init_epsilon=values["learn.init_epsilon"],
                init_zeta=values["learn.init_zeta"],
                init_jitter=values["learn.init_jitter"],
            )
            self.noise = NoiseConfig(
                mag_amplitude=values["noise.magnitude"],
                phase_amplitude=values["noise.phase"],
                hamiltonian_amplitude=values["noise.hamiltonian"],
                seed=values["noise.seed"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        self.subset_letters = values["observable.subset"]
        self.io_input = values["io.input"]
        self.io_output = values["io.output"]
        self.fit_orders = {
            "K": values["fit.order_k"],
            "epsilon": values["fit.order_epsilon"],
            "zeta": values["fit.order_zeta"],
        }

    def observable(self, n_qubits: int) -> WitnessObservable:
        subset = tuple(QUBIT_LETTERS.index(ch) for ch in self.subset_letters)
        try:
            return WitnessObservable(subset, n_qubits)
        except ValueError as exc:
            raise ConfigError(str(exc), field="observable.subset") from exc

    def header_lines(self) -> list[str]:
        """Canonical `key = value` lines of the effective configuration."""
        lines = []
        for key in _SCHEMA:
            value = self.values[key]
            if value is None:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        return lines

    def config_dict(self) -> dict:
        return {key: (list(v) if isinstance(v, tuple) else v)
                for key, v in self.values.items() if v is not None}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolve_config(file_entries: dict | None = None, overrides=()) -> ExperimentConfig:
    """Defaults, then config-file entries, then --set overrides, all typed."""
    values = {key: default for key, (_, default) in _SCHEMA.items()}

    def apply(key, text, line=None):
        if key not in _SCHEMA:
            raise ConfigError("unknown configuration key", field=key, line=line)
        caster, _ = _SCHEMA[key]
        try:
            values[key] = caster(text)
        except ValueError as exc:
            raise ConfigError(str(exc), field=key, line=line) from exc

    for key, (text, lineno) in (file_entries or {}).items():
        apply(key, text, lineno)
    for item in overrides:
        key, sep, text = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        apply(key.strip(), text.strip())
    return ExperimentConfig(values)


def load_config(path: str | None, overrides=(), task: str | None = None) -> ExperimentConfig:
    entries = None
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            entries = parse_config_text(fh.read())
    cfg = resolve_config(entries, overrides)
    if task is not None:
        cfg.task = task
        cfg.values["task"] = task
    return cfg


def _output_path(cfg: ExperimentConfig) -> str:
    if not cfg.io_output:
        raise ConfigError("this task writes a file; set io.output", field="io.output")
    path = cfg.io_output
    base = os.environ.get("QNNSIM_OUTPUT_DIR")
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _sibling(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + suffix


def _atomic_write_text(path: str, text: str) -> None:
    parent = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=parent, prefix=".qnnsim-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, cfg: ExperimentConfig, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# {VERSION_LINE}\n")
    for line in cfg.header_lines():
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_value(v) if not isinstance(v, str) else v for v in row])
    _atomic_write_text(path, buf.getvalue())


def _write_json(path: str, cfg: ExperimentConfig, payload: dict) -> None:
    doc = {"version": VERSION_LINE, "config": cfg.config_dict()}
    doc.update(payload)
    _atomic_write_text(path, json.dumps(doc, indent=1) + "\n")


def _read_start_schedule(cfg: ExperimentConfig) -> ParameterSchedule | None:
    if not cfg.io_input:
        return None
    schedule = read_schedule(cfg.io_input)
    if schedule.grid != cfg.grid:
        raise ConfigError(
            f"input schedule grid (t_final={schedule.grid.t_final!r}, "
            f"n_steps={schedule.grid.n_steps}) does not match the configured grid",
            field="io.input")
    return schedule


def run_train(cfg: ExperimentConfig, jobs: int = 1) -> int:
    out_path = _output_path(cfg)
    pairs = training_set(cfg.n_qubits)
    start = _read_start_schedule(cfg)
    report = train(pairs, cfg.n_qubits, cfg.grid, cfg.learn,
                   noise=cfg.noise, start=start)
    header = [VERSION_LINE] + cfg.header_lines()
    tmp_target = _sibling(out_path, ".schedule.tmp")
    try:
        write_schedule(tmp_target, report.schedule, header_comments=header)
        os.replace(tmp_target, out_path)
    except BaseException:
        if os.path.exists(tmp_target):
            os.unlink(tmp_target)
        raise
    report_path = _sibling(out_path, ".report.json")
    _write_json_report(report_path, cfg, report)
    print(f"trained {cfg.n_qubits} qubits: {report.epochs_run} epochs, "
          f"final rms {report.rms_history[-1]:.3e}")
    print(f"wrote {out_path} and {report_path}")
    return 0


def _write_json_report(path, cfg, report):
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".qnnsim-")
    os.close(fd)
    try:
        write_report(tmp, report, extra={"version": VERSION_LINE,
                                         "config": cfg.config_dict()})
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def test_curve(schedule: ParameterSchedule, family: str, gammas, noise_levels,
               seeds, observable: WitnessObservable):
    """Witness readout of a trained schedule on the 3-qubit test families.

    For the pure family P the oracle column is the analytic pair witness of
    the input; for the mixed family M it is the pure-limit reference 1.0.
    Each gamma keeps one run id so draws depend only on (seed, gamma index,
    step), never on the position of noise levels in the list.
    """
    rows = []
    for gi, gamma in enumerate(gammas):
        if family == "P":
            rho0 = outer_product(test_state_P(gamma))
            oracle = p_state_oracle(gamma)
        else:
            rho0 = test_state_M(gamma)
            oracle = 1.0
        for level in noise_levels:
            for seed in seeds:
                noise = total_noise(level, seed)
                rho, _ = propagate(rho0, schedule, 3, noise=noise, run_id=gi)
                rows.append((gamma, level, seed, output_value(rho, observable), oracle))
    return rows


def run_test(cfg: ExperimentConfig, jobs: int = 1) -> int:
    if cfg.n_qubits != 3:
        raise ConfigError("the P and M test families are 3-qubit states; "
                          "set n_qubits = 3", field="n_qubits")
    if not cfg.io_input:
        raise ConfigError("the test task reads a trained schedule; set io.input",
                          field="io.input")
    out_path = _output_path(cfg)
    schedule = read_schedule(cfg.io_input)
    observable = cfg.observable(3)
    rows = test_curve(schedule, cfg.values["test.family"], cfg.values["test.gammas"],
                      cfg.values["test.noise_levels"], cfg.values["test.seeds"],
                      observable)
    _write_csv(out_path, cfg, ("gamma", "noise", "seed", "output", "oracle"), rows)
    print(f"wrote {len(rows)} test rows to {out_path}")
    return 0


def run_sweep_noise(cfg: ExperimentConfig, jobs: int = 1) -> int:
    out_path = _output_path(cfg)
    result = coefficients_vs_noise(
        cfg.values["sweep.noise_grid"], cfg.values["sweep.seeds"],
        cfg.grid, cfg.learn, channel=cfg.values["sweep.channel"], jobs=jobs)
    _write_csv(out_path, cfg, ("noise", "seed", "param", "coef_name", "value"),
               result["coef_rows"])
    runs_path = _sibling(out_path, ".runs.json")
    _write_json(runs_path, cfg, {"runs": result["runs"]})
    print(f"wrote {len(result['coef_rows'])} coefficient rows to {out_path}")
    print(f"wrote per-cell training logs to {runs_path}")
    return 0


def run_sweep_qubits(cfg: ExperimentConfig, jobs: int = 1) -> int:
    counts = cfg.values["sweep.qubit_counts"]
    if (list(counts) != sorted(set(counts))
            or any(b - a != 1 for a, b in zip(counts, counts[1:]))):
        raise ConfigError("expected consecutive ascending qubit counts",
                          field="sweep.qubit_counts")
    if max(counts) > LONG_RUN_LIMIT and not cfg.values["sweep.long_run"]:
        raise ConfigError(
            f"registers above {LONG_RUN_LIMIT} qubits cost hours; "
            "set sweep.long_run = true to confirm", field="sweep.qubit_counts")
    out_path = _output_path(cfg)
    result = r2_vs_qubits(
        counts, cfg.values["sweep.amplitude"], cfg.values["sweep.seeds"],
        cfg.grid, cfg.learn, channel=cfg.values["sweep.channel"], jobs=jobs)
    _write_csv(out_path, cfg, ("n_qubits", "seed", "param", "r2"), result["r2_rows"])
    coef_path = _sibling(out_path, ".coefs.csv")
    _write_csv(coef_path, cfg, ("n_qubits", "seed", "param", "coef_name", "value"),
               result["coef_rows"])
    runs_path = _sibling(out_path, ".runs.json")
    _write_json(runs_path, cfg, {"runs": result["runs"]})
    print(f"wrote {len(result['r2_rows'])} fit-quality rows to {out_path}")
    print(f"wrote coefficients to {coef_path} and training logs to {runs_path}")
    return 0


def run_fit(cfg: ExperimentConfig, jobs: int = 1) -> int:
    if not cfg.io_input:
        raise ConfigError("the fit task reads a schedule; set io.input", field="io.input")
    out_path = _output_path(cfg)
    schedule = read_schedule(cfg.io_input)
    fits = fit_parameter_series(schedule, orders=cfg.fit_orders)
    rows = []
    for param in ("K", "epsilon", "zeta"):
        fit = fits[param]
        for name, value in fit.coefficients().items():
            rows.append((param, name, value))
        rows.append((param, "fit_rms", fit.fit_rms))
        rows.append((param, "r_squared", fit.r_squared))
    _write_csv(out_path, cfg, ("param", "coef_name", "value"), rows)
    print(f"wrote Fourier fits for 3 series to {out_path}")
    return 0


_RUNNERS = {
    "train": run_train,
    "test": run_test,
    "sweep-noise": run_sweep_noise,
    "sweep-qubits": run_sweep_qubits,
    "fit": run_fit,
}


def run(cfg: ExperimentConfig, jobs: int = 1) -> int:
    if cfg.task is None:
        raise ConfigError("no task selected; pass a CLI verb or set task=",
                          field="task")
    return _RUNNERS[cfg.task](cfg, jobs=jobs)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnnsim",
        description="Train, probe, and analyze witness-readout schedule networks.")
    sub = parser.add_subparsers(dest="task", required=True)
    descriptions = {
        "train": "gradient-descent training of a parameter schedule",
        "test": "evaluate a trained schedule on the P or M test family",
        "sweep-noise": "fitted coefficients of noisy-trained schedules vs amplitude",
        "sweep-qubits": "fit quality of bootstrapped schedules vs register size",
        "fit": "Fourier-fit the series of an existing schedule",
    }
    for task in TASKS:
        p = sub.add_parser(task, help=descriptions[task])
        p.add_argument("--config", metavar="PATH", help="configuration file")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       dest="overrides", help="override one configuration entry")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="worker processes for sweep cells (default 1)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, args.overrides, task=args.task)
        return run(cfg, jobs=args.jobs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
