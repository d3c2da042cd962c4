"""Command-line experiment harness.

``qad run`` compares one classical detector with its quantum counterpart and
writes a JSON report; ``qad sweep`` repeats the quantum side over a list of
shot counts or phase-estimation widths and writes a CSV table.

Exit codes: 0 when the two labels agree, 2 when they disagree, 1 on error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from . import classical, density, gauss
from .encode import Dataset, NormedVector, load_dataset, parse_csv
from .errors import QADError
from .qcore import Exact, PhaseEstimationConfig, Sampled

SCHEMA = "qad-report/1"
METHODS = ("density", "gauss", "proximity")
EXIT_AGREE, EXIT_ERROR, EXIT_DISAGREE = 0, 1, 2


class StageError(Exception):
    """A package error annotated with the pipeline stage that raised it."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error


@dataclass(frozen=True)
class RunConfig:
    method: str
    data: str
    test: str
    epsilon: float
    kappa: float | None = None
    bits: int | None = None
    auto_bits: float | None = None
    mode: str = "exact"
    shots: int | None = None
    seed: int = 0
    header: bool = False
    normalize: bool = True
    out: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if (self.mode == "sampled") != (self.shots is not None):
            raise ValueError("--shots is required with --mode sampled and only then")
        if self.method in ("gauss", "proximity"):
            if self.kappa is None:
                raise ValueError(f"--kappa is required for method {self.method}")
            if (self.bits is None) == (self.auto_bits is None):
                raise ValueError("exactly one of --bits or --auto-bits is required")

    def estimator_mode(self):
        if self.mode == "exact":
            return Exact()
        return Sampled(int(self.shots), int(self.seed))

    def phase_config(self) -> PhaseEstimationConfig:
        bits = self.bits
        if bits is None:
            bits = gauss.precision_for(self.auto_bits, self.kappa)
        return PhaseEstimationConfig(int(bits), float(self.kappa))

    def echo(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("out")
        if self.method in ("gauss", "proximity"):
            out["resolved_bits"] = self.phase_config().bits
        return out


@dataclass
class ComparisonReport:
    method: str
    classical_score: float
    quantum_score: float
    classical_label: str
    quantum_label: str
    success_probabilities: dict[str, float]
    discarded_weight: float | None
    error_bound: float | None
    config: dict[str, Any]
    wall_time_s: float = field(default=0.0, compare=False)
    schema: str = SCHEMA

    @property
    def abs_diff(self) -> float:
        return abs(self.classical_score - self.quantum_score)

    @property
    def agreement(self) -> bool:
        return self.classical_label == self.quantum_label

    @property
    def exit_code(self) -> int:
        return EXIT_AGREE if self.agreement else EXIT_DISAGREE

    def body(self) -> dict[str, Any]:
        return {
            "schema": self.schema,
            "method": self.method,
            "classical_score": self.classical_score,
            "quantum_score": self.quantum_score,
            "abs_diff": self.abs_diff,
            "classical_label": self.classical_label,
            "quantum_label": self.quantum_label,
            "agreement": self.agreement,
            "success_probabilities": self.success_probabilities,
            "discarded_weight": self.discarded_weight,
            "error_bound": self.error_bound,
            "config": self.config,
        }

    def canonical_json(self) -> str:
        """Report without timing fields; identical for identical config and seed."""
        return json.dumps(self.body(), sort_keys=True, indent=2) + "\n"

    def to_json(self) -> str:
        # timing goes last so the reproducible part is a byte-identical prefix
        text = json.dumps(self.body(), sort_keys=True, indent=2)
        return text[:-2] + f',\n  "timing": {{\n    "wall_time_s": {self.wall_time_s!r}\n  }}\n}}\n'


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (QADError, ValueError, OSError) as exc:
        raise StageError(name, exc) from exc


def load_inputs(config: RunConfig) -> tuple[Dataset, NormedVector]:
    data = _stage("load data", load_dataset, config.data, normalize_rows=config.normalize, header=config.header)

    def test_vector():
        try:
            index = int(config.test)
        except ValueError:
            rows = parse_csv(config.test, header=config.header)
            if rows.shape[0] != 1:
                raise QADError(f"test file must hold exactly one row, found {rows.shape[0]}")
            return data.prepare_test(rows[0])
        return data.row(index)

    return data, _stage("load test input", test_vector)


def _density(config: RunConfig, data: Dataset, x0: NormedVector, mode) -> ComparisonReport:
    model = _stage("classical density", classical.fit_density, data)
    c_label, c_score = classical.classify_density(model, x0.real(), config.epsilon)
    rep = _stage("quantum density", density.detect_density, data, x0, config.epsilon, mode)
    return ComparisonReport(
        method="density",
        classical_score=c_score,
        quantum_score=rep.log_p,
        classical_label=c_label.value,
        quantum_label=rep.label.value,
        success_probabilities=rep.success_probabilities,
        discarded_weight=None,
        error_bound=None,
        config=config.echo(),
    )


def _gauss(config: RunConfig, data: Dataset, x0: NormedVector, mode) -> ComparisonReport:
    model = _stage("classical gauss", classical.fit_gaussian, data, "M-1")
    c_label, c_score, _ = classical.classify_gaussian(model, x0.real(), config.epsilon)
    pe = _stage("phase estimation config", config.phase_config)
    rep = _stage("quantum gauss", gauss.detect_gaussian, data, x0, config.epsilon, pe, mode)
    return ComparisonReport(
        method="gauss",
        classical_score=c_score,
        quantum_score=rep.p_test,
        classical_label=c_label.value,
        quantum_label=rep.label.value,
        success_probabilities={},
        discarded_weight=rep.discarded_weight,
        error_bound=rep.ptest_error_bound,
        config=config.echo(),
    )


def proximity_label(f: float, epsilon: float) -> classical.Label:
    return classical.Label.ANOMALY if f > epsilon else classical.Label.NORMAL


def _proximity(config: RunConfig, data: Dataset, x0: NormedVector, mode) -> ComparisonReport:
    def centered():
        x = x0.real()[data.feature_mask]
        return gauss.prepare_centered_state(NormedVector.from_vector(x), data.genuine.mean(axis=0))

    z0 = _stage("centered test state", centered)
    unit = NormedVector(z0.unit, 1.0)
    c_score = _stage("classical proximity", classical.proximity_classical, data, unit.real())
    pe = _stage("phase estimation config", config.phase_config)
    cov = _stage("covariance operator", gauss.build_covariance, data, normalize_states=True)
    q_score = _stage("quantum proximity", gauss.proximity_quantum, cov, unit, pe, mode)
    return ComparisonReport(
        method="proximity",
        classical_score=c_score,
        quantum_score=q_score,
        classical_label=proximity_label(c_score, config.epsilon).value,
        quantum_label=proximity_label(q_score, config.epsilon).value,
        success_probabilities={},
        discarded_weight=None,
        error_bound=None,
        config=config.echo(),
    )


_RUNNERS = {"density": _density, "gauss": _gauss, "proximity": _proximity}


def run(config: RunConfig, inputs: tuple[Dataset, NormedVector] | None = None) -> ComparisonReport:
    """Execute the classical oracle and the quantum pipeline for ``config``.

    Writes the JSON report to ``config.out`` when set.  Raises
    :class:`StageError` naming the failing stage.
    """
    start = time.perf_counter()
    data, x0 = inputs if inputs is not None else load_inputs(config)
    report = _RUNNERS[config.method](config, data, x0, config.estimator_mode())
    report.wall_time_s = time.perf_counter() - start
    if config.out:
        _stage("write report", Path(config.out).write_text, report.to_json(), encoding="utf-8")
    return report


def sweep(config: RunConfig, parameter: str, values) -> str:
    """Re-run the quantum side for each value of ``shots`` or ``bits``; return CSV text.

    Evaluation ``k`` uses seed ``config.seed + k``.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if parameter == "shots":
        if config.mode != "sampled":
            raise ValueError("a shots sweep needs --mode sampled")
    elif parameter == "bits":
        if config.method not in ("gauss", "proximity"):
            raise ValueError(f"a bits sweep does not apply to method {config.method}")
    else:
        raise ValueError(f"sweep parameter must be 'shots' or 'bits', got {parameter!r}")

    inputs = load_inputs(config)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([parameter, "seed", "quantum_score", "classical_score", "abs_diff", "wall_time_s"])
    for k, value in enumerate(values):
        changes: dict[str, Any] = {"seed": config.seed + k, "out": None}
        if parameter == "shots":
            changes["shots"] = int(value)
        else:
            changes.update(bits=int(value), auto_bits=None)
        cfg = replace(config, **changes)
        report = run(cfg, inputs)
        writer.writerow(
            [value, cfg.seed, repr(report.quantum_score), repr(report.classical_score),
             repr(report.abs_diff), f"{report.wall_time_s:.6f}"]
        )
    text = buf.getvalue()
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    return text


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--test", required=True, help="row index into --data, or a one-row CSV file")
    p.add_argument("--epsilon", type=float, required=True, help="detection threshold")
    p.add_argument("--kappa", type=float, help="effective condition number (gauss, proximity)")
    bits = p.add_mutually_exclusive_group()
    bits.add_argument("--bits", type=int, help="phase-estimation bits")
    bits.add_argument("--auto-bits", type=float, metavar="EPS", help="choose bits for target error EPS")
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--no-normalize", action="store_true", help="keep raw row scale")
    p.add_argument("--out", help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="compare classical and quantum detectors"))
    sw = sub.add_parser("sweep", help="sweep shots or bits")
    _add_common(sw)
    sw.add_argument("--param", choices=("shots", "bits"), required=True)
    sw.add_argument("--values", required=True, help="comma-separated integers")
    return parser


def _config(args, bits_values=None) -> RunConfig:
    bits = args.bits
    if bits_values and bits is None and args.auto_bits is None:
        bits = bits_values[0]
    return RunConfig(
        method=args.method,
        data=args.data,
        test=args.test,
        epsilon=args.epsilon,
        kappa=args.kappa,
        bits=bits,
        auto_bits=args.auto_bits,
        mode=args.mode,
        shots=args.shots,
        seed=args.seed,
        header=args.header,
        normalize=not args.no_normalize,
        out=args.out,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run(_config(args))
            sys.stdout.write(report.to_json())
            return report.exit_code
        values = [int(v) for v in args.values.split(",") if v.strip()]
        config = _config(args, values if args.param == "bits" else None)
        sys.stdout.write(sweep(config, args.param, values))
        return EXIT_AGREE
    except StageError as exc:
        print(f"qad: error {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (QADError, ValueError) as exc:
        print(f"qad: error [config] {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

