"""Command-line front end: ``qaoa-coloring {solve,compare,sweep,verify,gen-graph}``.

Configuration is flat ``key=value`` text with dotted section prefixes::

    graph.reference = A'
    problem.k = 3
    problem.encoding = binary
    qaoa.p = 6
    optimizer.seed = 1

A JSON file (flat dotted keys or nested objects) is accepted as well. Unknown
keys are rejected. Exit codes: 0 success, 1 error, 2 ran but missed the gap
threshold.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from . import verification
from .baselines import SaConfig, SweepRow, TabuConfig, sweep_csv, sweep_point
from .graphlib import Graph, format_graph, generate_er, read_graph, reference_instance
from .hamiltonian import MAX_QUBITS, ColoringInstance, Encoding, unit_excitation_weights
from .qaoa import Ansatz, GradientMethod, OptimizerConfig, RunRecord, optimize

SUMMARY_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Raised for unreadable, malformed or inconsistent configuration."""


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


# key -> (parser, default); None default means "unset"
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "graph.file": (str, None),
    "graph.reference": (str, None),
    "graph.er.n": (int, None),
    "graph.er.p_percent": (float, None),
    "graph.er.seed": (int, 0),
    "problem.k": (int, None),
    "problem.encoding": (Encoding.parse, Encoding.BINARY),
    "problem.weights": (str, "unit"),
    "problem.C": (float, None),
    "problem.D": (float, None),
    "problem.P": (float, None),
    "qaoa.p": (int, 6),
    "qaoa.p_onehot": (int, None),
    "qaoa.p_binary": (int, None),
    "qaoa.shots": (int, 0),
    "qaoa.gradient_method": (GradientMethod.parse, GradientMethod.PARAMETER_SHIFT),
    "optimizer.lr": (float, 0.05),
    "optimizer.momentum": (float, 0.9),
    "optimizer.max_iter": (int, 500),
    "optimizer.stop_gap": (float, 0.75),
    "optimizer.seed": (int, 0),
    "output.dir": (str, "out"),
    "sweep.n": (_int_list, [30]),
    "sweep.k": (_int_list, [3]),
    "sweep.p_percent": (_float_list, None),
    "sweep.connectivity": (_float_list, None),
    "sweep.trials": (int, 50),
    "sweep.solver": (str, "tabu"),
    "sweep.seed": (int, 0),
    "sweep.max_runs": (int, 100_000),
    "tabu.tenure": (int, 7),
    "tabu.max_moves": (int, 10_000),
    "tabu.time_budget": (_optional_float, None),
    "sa.sweeps": (int, 1000),
    "sa.beta_initial": (float, 0.1),
    "sa.beta_final": (float, 10.0),
}


def _flatten(obj: dict, prefix: str = "") -> dict[str, str]:
    flat = {}
    for key, value in obj.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, full + "."))
        elif isinstance(value, list):
            flat[full] = ",".join(str(v) for v in value)
        else:
            flat[full] = "none" if value is None else str(value)
    return flat


def parse_config_text(text: str) -> dict[str, str]:
    """Raw ``key -> value`` strings from flat text or its JSON mirror."""
    if text.lstrip().startswith("{"):
        try:
            return _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


@dataclass
class ExperimentConfig:
    values: dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @classmethod
    def from_raw(cls, raw: dict[str, str]) -> "ExperimentConfig":
        values = {k: default for k, (_, default) in SCHEMA.items()}
        for key, text in raw.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                values[key] = SCHEMA[key][0](text)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
        cfg = cls(values)
        cfg.check()
        return cfg

    def check(self) -> None:
        v = self.values
        if v["problem.weights"] not in ("unit", "flat"):
            raise ConfigError("problem.weights must be 'unit' or 'flat'")
        if v["problem.k"] is not None and v["problem.k"] < 2:
            raise ConfigError("problem.k must be at least 2")
        for key in ("qaoa.p", "qaoa.p_onehot", "qaoa.p_binary"):
            if v[key] is not None and v[key] < 1:
                raise ConfigError(f"{key} must be at least 1")
        for key in ("problem.C", "problem.D", "problem.P"):
            if v[key] is not None and not v[key] > 0:
                raise ConfigError(f"{key} must be positive")
        if v["graph.er.p_percent"] is not None and not 0 <= v["graph.er.p_percent"] <= 100:
            raise ConfigError("graph.er.p_percent must lie in [0, 100]")
        if v["sweep.solver"] not in ("tabu", "sa"):
            raise ConfigError("sweep.solver must be 'tabu' or 'sa'")
        if v["sweep.trials"] < 1:
            raise ConfigError("sweep.trials must be at least 1")
        if v["sweep.p_percent"] is not None and v["sweep.connectivity"] is not None:
            raise ConfigError("give sweep.p_percent or sweep.connectivity, not both")
        try:
            self.optimizer_config()
            TabuConfig(v["tabu.tenure"], v["tabu.max_moves"], 0, v["tabu.time_budget"])
            SaConfig(v["sa.sweeps"], v["sa.beta_initial"], v["sa.beta_final"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def graph_sources(self) -> list[str]:
        v = self.values
        sources = []
        if v["graph.file"] is not None:
            sources.append("file")
        if v["graph.reference"] is not None:
            sources.append("reference")
        if v["graph.er.n"] is not None or v["graph.er.p_percent"] is not None:
            sources.append("er")
        return sources

    def load_graph(self) -> tuple[Graph, Optional[int]]:
        """The configured graph plus the color count implied by a reference instance."""
        sources = self.graph_sources()
        if len(sources) != 1:
            raise ConfigError(f"exactly one graph source is required (graph.file, graph.reference "
                              f"or graph.er.*), got {sources or 'none'}")
        v = self.values
        try:
            if sources[0] == "file":
                return read_graph(v["graph.file"]), None
            if sources[0] == "reference":
                return reference_instance(v["graph.reference"])
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load graph: {exc}") from exc
        if v["graph.er.n"] is None or v["graph.er.p_percent"] is None:
            raise ConfigError("graph.er.n and graph.er.p_percent are both required")
        if v["graph.er.n"] < 1:
            raise ConfigError("graph.er.n must be at least 1")
        return generate_er(v["graph.er.n"], v["graph.er.p_percent"] / 100.0, v["graph.er.seed"]), None

    def instance(self, encoding: Optional[Encoding] = None) -> ColoringInstance:
        g, ref_k = self.load_graph()
        k = self.values["problem.k"] or ref_k
        if k is None:
            raise ConfigError("problem.k is required unless graph.reference is used")
        encoding = encoding or self.values["problem.encoding"]
        if self.values["problem.weights"] == "unit":
            C, D, P = unit_excitation_weights(k, encoding)
        else:
            C, D, P = 1.0, 1.0, 1.0
        C = self.values["problem.C"] or C
        D = self.values["problem.D"] or D
        P = self.values["problem.P"] or P
        inst = ColoringInstance(g, k, encoding, C, D, P)
        if inst.num_qubits > MAX_QUBITS:
            raise ConfigError(f"{encoding.value} encoding needs {inst.num_qubits} qubits, "
                              f"more than the simulator cap of {MAX_QUBITS}")
        return inst

    def qaoa_depth(self, encoding: Encoding) -> int:
        specific = self.values["qaoa.p_onehot" if encoding is Encoding.ONEHOT else "qaoa.p_binary"]
        return specific or self.values["qaoa.p"]

    def optimizer_config(self) -> OptimizerConfig:
        v = self.values
        return OptimizerConfig(learning_rate=v["optimizer.lr"], momentum=v["optimizer.momentum"],
                               max_iterations=v["optimizer.max_iter"], shots=v["qaoa.shots"],
                               gradient_method=v["qaoa.gradient_method"], seed=v["optimizer.seed"],
                               stop_gap=v["optimizer.stop_gap"])

    def as_dict(self) -> dict[str, Any]:
        """Resolved settings for the artifacts; the output location is left out."""
        out = {}
        for key, value in self.values.items():
            if key == "output.dir":
                continue
            if isinstance(value, (Encoding, GradientMethod)):
                value = value.value
            out[key] = value
        return out


def load_config(path: Optional[str], overrides: Sequence[str] = (), seed: Optional[int] = None,
                out: Optional[str] = None) -> ExperimentConfig:
    raw: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        raw = parse_config_text(text)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        raw[key.strip()] = value.strip()
    if seed is not None:
        raw["optimizer.seed"] = raw["sweep.seed"] = str(seed)
    if out is not None:
        raw["output.dir"] = out
    return ExperimentConfig.from_raw(raw)


def _level_depths(a: Ansatz, record: RunRecord) -> list[int]:
    theta = record.final_parameters
    return [a.level_circuit(b, g).depth() for b, g in zip(theta.beta, theta.gamma)]


def run_solve(cfg: ExperimentConfig, inst: ColoringInstance, p: int) -> tuple[RunRecord, dict, str]:
    """Optimise one instance; returns the record, the summary dict and the circuit dump."""
    a = Ansatz(inst.hamiltonian(), p)
    t0 = time.perf_counter()
    record = optimize(a, cfg.optimizer_config(), inst)
    wall = time.perf_counter() - t0
    circuit = a.circuit(record.final_parameters)
    decoder = inst.decoder()
    final = record.final
    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "encoding": inst.encoding.value,
        "n": inst.graph.n,
        "k": inst.k,
        "num_edges": inst.graph.num_edges,
        "weights": {"C": inst.weight_C, "D": inst.weight_D, "P": inst.weight_P},
        "num_qubits": inst.num_qubits,
        "p": p,
        "depth_per_level": _level_depths(a, record),
        "total_depth": circuit.depth(),
        "cnot_count": circuit.count("CX"),
        "exact_min": record.exact_min,
        "final_energy": final.energy,
        "gap": final.gap,
        "stop_gap": record.stop_gap,
        "converged": record.converged,
        "prob_valid": final.prob_valid,
        "iterations": final.iter,
        "iterations_to_threshold": record.iterations_to_threshold,
        "final_parameters": {"beta": list(record.final_parameters.beta),
                             "gamma": list(record.final_parameters.gamma)},
        "top_outcomes": [{"bitstring": b, "probability": pr,
                          "coloring": [-1 if c is None else c for c in decoder.decode(b)]}
                         for b, pr in record.top_outcomes],
        "config": cfg.as_dict(),
        "wall_time_s": wall,
    }
    return record, summary, circuit.dump()


def _write_run(directory: Path, record: RunRecord, summary: dict, circuit: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    record.write_csv(directory / "run.csv")
    (directory / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    (directory / "circuit.txt").write_text(circuit)


def cmd_solve(cfg: ExperimentConfig) -> int:
    inst = cfg.instance()
    p = cfg.qaoa_depth(inst.encoding)
    record, summary, circuit = run_solve(cfg, inst, p)
    out = Path(cfg["output.dir"])
    _write_run(out, record, summary, circuit)
    print(f"{inst.encoding.value}: {inst.num_qubits} qubits, p={p}, energy {record.final.energy:.6f}, "
          f"gap {record.final.gap:.6f}, prob_valid {record.final.prob_valid:.4f}, "
          f"{record.final.iter} iterations -> {out}")
    return 0 if record.converged else 2


def cmd_compare(cfg: ExperimentConfig) -> int:
    instances = {enc: cfg.instance(enc) for enc in (Encoding.ONEHOT, Encoding.BINARY)}
    out = Path(cfg["output.dir"])
    report: dict[str, Any] = {"schema_version": SUMMARY_SCHEMA_VERSION, "encodings": {}}
    results = {}
    for enc, inst in instances.items():
        record, summary, circuit = run_solve(cfg, inst, cfg.qaoa_depth(enc))
        results[enc] = (record, summary, circuit)
    for enc, (record, summary, circuit) in results.items():
        _write_run(out / enc.value, record, summary, circuit)
        report["encodings"][enc.value] = {
            key: summary[key] for key in ("num_qubits", "p", "depth_per_level", "total_depth", "cnot_count",
                                          "final_energy", "gap", "converged", "prob_valid", "iterations",
                                          "iterations_to_threshold", "wall_time_s")
        }
    widths = {enc: inst.num_qubits for enc, inst in instances.items()}
    report["width_ratio"] = widths[Encoding.ONEHOT] / widths[Encoding.BINARY]
    report["config"] = cfg.as_dict()
    (out / "compare.json").write_text(json.dumps(report, indent=2) + "\n")
    for enc, row in report["encodings"].items():
        print(f"{enc:>7}: {row['num_qubits']:3d} qubits, depth/level {row['depth_per_level'][0]:4d}, "
              f"iterations to threshold {row['iterations_to_threshold']}, prob_valid {row['prob_valid']:.4f}")
    print(f"width ratio {report['width_ratio']:.3f} -> {out}")
    return 0 if all(r[0].converged for r in results.values()) else 2


def sweep_grid(cfg: ExperimentConfig) -> list[tuple[int, int, float]]:
    """``(n, k, p)`` points with p as a fraction."""
    v = cfg.values
    if v["sweep.connectivity"] is not None:
        return [(n, k, min(1.0, c / n)) for n, k, c in itertools.product(v["sweep.n"], v["sweep.k"],
                                                                          v["sweep.connectivity"])]
    percents = v["sweep.p_percent"] or []
    return [(n, k, pp / 100.0) for n, k, pp in itertools.product(v["sweep.n"], v["sweep.k"], percents)]


def _sweep_task(args: tuple) -> SweepRow:
    n, k, p, trials, solver, seed, tabu, sa = args
    return sweep_point(n, k, p, trials, solver, seed, tabu, sa)


def cmd_sweep(cfg: ExperimentConfig, jobs: int = 1) -> int:
    v = cfg.values
    grid = sweep_grid(cfg)
    runs = len(grid) * v["sweep.trials"]
    if runs > v["sweep.max_runs"]:
        raise ConfigError(f"sweep needs {len(grid)} points x {v['sweep.trials']} trials = {runs} solver runs, "
                          f"over sweep.max_runs={v['sweep.max_runs']}; shrink the grid or raise the budget")
    tabu = TabuConfig(v["tabu.tenure"], v["tabu.max_moves"], 0, v["tabu.time_budget"])
    sa = SaConfig(v["sa.sweeps"], v["sa.beta_initial"], v["sa.beta_final"])
    tasks = [(n, k, p, v["sweep.trials"], v["sweep.solver"], v["sweep.seed"], tabu, sa) for n, k, p in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    out = Path(v["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(rows))
    for r in rows:
        print(f"n={r.n:3d} k={r.k} p={r.p:.4f} c={r.connectivity:6.3f}  success {r.successes}/{r.trials}")
    print(f"{len(rows)} points -> {out / 'sweep.csv'}")
    return 0


def cmd_verify() -> int:
    t0 = time.perf_counter()
    ok = verification.run_checks()
    print(f"{'all checks passed' if ok else 'some checks FAILED'} in {time.perf_counter() - t0:.1f}s")
    return 0 if ok else 1


def cmd_gen_graph(cfg: ExperimentConfig) -> int:
    g, _ = cfg.load_graph()
    out = Path(cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "graph.txt"
    path.write_text(format_graph(g))
    print(f"{g.n} nodes, {g.num_edges} edges -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoa-coloring", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("solve", "optimise QAOA on one instance"),
                            ("compare", "run one-hot and binary encodings with matched seeds"),
                            ("sweep", "classical solver success rates over an ER grid"),
                            ("verify", "run the fast invariant suite"),
                            ("gen-graph", "write the configured graph to OUT/graph.txt")):
        sp = sub.add_parser(name, help=help_text)
        if name == "verify":
            continue
        sp.add_argument("--config", help="flat key=value or JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="overrides optimizer.seed and sweep.seed")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify()
        if getattr(args, "jobs", 1) < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = load_config(args.config, args.set, args.seed, args.out)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.jobs)
        return cmd_gen_graph(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
