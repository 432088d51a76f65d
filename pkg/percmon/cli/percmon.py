"""
Perception-system fault diagnosis: generate labelled syndrome datasets, fit
test and prior parameters, identify faults and report accuracy, analyse
diagnosability of a diagnostic graph.
"""
import argparse
import concurrent.futures
import logging
import pathlib
import statistics
import sys
import time
from typing import List, Optional, Sequence, Tuple

import percmon
from percmon import diagnosability, evaluation, jsonio, manifest, utils
from percmon.config import ALGORITHMS, KINDS, RunConfig, ScenarioConfig
from percmon.dataset import TRAIN, Dataset, generate_dataset
from percmon.identifiers import DETERMINISTIC, WEAKER_OR, Identifier, make_identifier

log = logging.getLogger("percmon.cli")

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

PARAMS_NAME = "params.json"
PREDICTIONS_NAME = "predictions.ndjson"
METRICS_CSV_NAME = "metrics.csv"
METRICS_JSON_NAME = "metrics.json"
TIMING_NAME = "timing.json"
DIAGNOSABILITY_NAME = "diagnosability.json"
PAC_NAME = "pac.csv"
PAC_FIELDS = ("slice", "delta", "empirical_hamming", "n_failure_modes", "sample_count", "value")
REPORT_JSON_NAME = "report.json"


def parse_arguments(argv: Optional[Sequence[str]] = None):
    def case_insensitive_string_opt(arg: Optional[str]) -> Optional[str]:
        if arg is None:
            return None
        return arg.casefold()

    parser = argparse.ArgumentParser(
        prog="percmon",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=__doc__)

    parser.add_argument(
        "--config",
        type=pathlib.Path,
        default=None,
        help="JSON file whose keys override the command-line flags"
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Output more messages"
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Output debug messages"
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--graph",
        type=str,
        default=None,
        help="Builtin graph name or graph definition file (default: apollo-obstacle)"
    )
    common.add_argument(
        "--kind",
        type=case_insensitive_string_opt,
        choices=KINDS,
        default=None,
        help="Regular graph or two-slice temporal graph"
    )
    common.add_argument(
        "--semantics",
        type=str,
        default=None,
        help="Re-tag every test with these semantics (DeterministicOR, WeakOR, WeakerOR)"
    )
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Root seed for every random stream"
    )
    common.add_argument(
        "--out",
        type=pathlib.Path,
        default=None,
        help="Output directory (default: current directory)"
    )

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument(
        "--dataset",
        type=str,
        default=None,
        help="Dataset directory or file"
    )
    data.add_argument(
        "--split",
        type=case_insensitive_string_opt,
        default=None,
        help="Dataset split to evaluate on (default: test)"
    )
    data.add_argument(
        "--params",
        type=str,
        default=None,
        help="Learned parameter file"
    )

    subparsers = parser.add_subparsers(dest="subcommand")

    generate_parser = subparsers.add_parser(
        "generate", parents=[common], description="Simulate a drive and write a labelled syndrome dataset"
    )
    generate_parser.add_argument(
        "--count",
        type=int,
        default=None,
        help="Number of samples (default: 1650)"
    )
    generate_parser.add_argument(
        "--scenario",
        type=str,
        default=None,
        help="Scenario configuration file (default: builtin scenario)"
    )

    subparsers.add_parser(
        "fit", parents=[common, data], description="Fit Noisy-OR, prior and transition parameters on the training split"
    )

    infer_parser = subparsers.add_parser(
        "infer", parents=[common, data], description="Identify faults for every sample of a split and score the result"
    )
    infer_parser.add_argument(
        "--algo",
        type=case_insensitive_string_opt,
        choices=ALGORITHMS,
        default=None,
        help="Identification algorithm (default: factor-graph)"
    )
    infer_parser.add_argument(
        "--budget",
        type=int,
        default=None,
        help="Most failure modes the deterministic solver may declare active"
    )
    infer_parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker processes (default: 1)"
    )

    diag_parser = subparsers.add_parser(
        "diagnosability", parents=[common, data], description="Diagnosability of a graph and PAC bounds of an identifier"
    )
    diag_parser.add_argument(
        "--algo",
        type=case_insensitive_string_opt,
        choices=ALGORITHMS,
        default=None,
        help="Identifier for the PAC bound (needs --dataset)"
    )
    diag_parser.add_argument(
        "--policy",
        type=case_insensitive_string_opt,
        choices=diagnosability.POLICIES,
        default=None,
        help="Failure modes to include (default: both policies)"
    )
    diag_parser.add_argument(
        "--max-k",
        dest="max_k",
        type=int,
        default=None,
        help="Largest fault-set size to examine"
    )
    diag_parser.add_argument(
        "--budget",
        type=int,
        default=None,
        help="Fault sets to examine at most"
    )
    diag_parser.add_argument(
        "--delta",
        type=float,
        nargs="+",
        default=None,
        help="Confidence parameters of the PAC bound"
    )

    report_parser = subparsers.add_parser(
        "report", parents=[common], description="Merge results of several infer runs into comparison tables"
    )
    report_parser.add_argument(
        "inputs",
        nargs="*",
        default=None,
        help="Output directories of infer runs"
    )

    subparsers.add_parser(
        "export", parents=[common, data], description="Write clique-expanded graphs with node features for every sample"
    )

    return parser.parse_args(argv)


def setup_logging(args: argparse.Namespace):
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def load_graph(run: RunConfig, deterministic: bool = False) -> percmon.DiagnosticGraph:
    """The deterministic solvers get the temporal graph without transition relations."""
    return percmon.load_graph(run.graph, run.kind, run.semantics, transitions=not deterministic)


def load_params(run: RunConfig) -> Optional[percmon.LearnedParams]:
    return percmon.LearnedParams.load(run.params) if run.params else None


def require_dataset(run: RunConfig) -> str:
    if not run.dataset:
        raise percmon.ConfigError("No dataset given, use --dataset", code="missing-dataset")
    return run.dataset


def write_manifest(run: RunConfig, command: str, config: dict, **extra) -> pathlib.Path:
    document = manifest.build_manifest(command, run.seed, config, graph=run.graph, kind=run.kind, **extra)
    return manifest.write_manifest(document, run.out)


def generate_cmd(run: RunConfig) -> Optional[int]:
    scenario = ScenarioConfig.load(run.scenario)
    dataset = generate_dataset(scenario, run.count, run.seed, run.kind)
    paths = dataset.save(run.out)
    config = {"scenario": scenario.to_config(), "count": run.count, "kind": run.kind}
    write_manifest(run, "generate", config, counts=dataset.counts(), scenario_hash=scenario.hash)
    jsonio.print_json({"counts": dataset.counts(), "files": {k: str(v) for k, v in paths.items()}})
    return 0


def fit_cmd(run: RunConfig) -> Optional[int]:
    graph = load_graph(run)
    train = Dataset.load(require_dataset(run), TRAIN)
    train.check_graph(graph)
    params = percmon.fit_params(graph, train)
    path = run.out / PARAMS_NAME
    params.save(path)
    write_manifest(run, "fit", {"dataset": run.dataset, "samples": len(train)}, samples=len(train))
    log.info("Wrote %s to %s", params, path)
    jsonio.print_json({"params": str(path), "samples": len(train)})
    return 0


_worker: Optional[Identifier] = None


def _init_worker(algo: str, graph, params, budget: Optional[int]):
    global _worker
    _worker = make_identifier(algo, graph, params, budget)


def _timed(identifier: Identifier, syndrome) -> Tuple[Tuple[int, ...], float]:
    start = time.perf_counter()
    assignment = identifier(syndrome)
    return assignment, (time.perf_counter() - start) * 1000.0


def _identify(syndrome) -> Tuple[Tuple[int, ...], float]:
    return _timed(_worker, syndrome)


def identify_all(run: RunConfig, graph, params, syndromes: List[Tuple[int, ...]]) -> Tuple[List[Tuple[int, ...]], List[float]]:
    """Predictions and per-sample milliseconds, in dataset order."""
    if run.workers == 1:
        identifier = make_identifier(run.algo, graph, params, run.budget)
        results = [_timed(identifier, s) for s in syndromes]
        if identifier.failures:
            log.warning("%s could not explain %d of %d syndromes", identifier, identifier.failures, len(syndromes))
    else:
        # validate once in the parent so configuration errors are not raised per worker
        make_identifier(run.algo, graph, params, run.budget)
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=run.workers, initializer=_init_worker,
                initargs=(run.algo, graph, params, run.budget)) as executor:
            results = list(executor.map(_identify, syndromes, chunksize=max(1, len(syndromes) // (4 * run.workers))))
    return [r[0] for r in results], [r[1] for r in results]


def timing_stats(times: Sequence[float]) -> dict:
    return {
        "samples": len(times),
        "mean_ms": statistics.fmean(times) if times else 0.0,
        "std_ms": statistics.pstdev(times) if len(times) > 1 else 0.0,
        "max_ms": max(times) if times else 0.0,
    }


def infer_cmd(run: RunConfig) -> Optional[int]:
    graph = load_graph(run, deterministic=run.algo in (DETERMINISTIC, WEAKER_OR))
    params = load_params(run)
    dataset = Dataset.load(require_dataset(run), run.split)
    if not len(dataset):
        raise percmon.EmptyDatasetError(f"No samples in split '{run.split}'", path=run.dataset)
    dataset.check_graph(graph)
    syndromes = [s.syndrome for s in dataset]
    predictions, times = identify_all(run, graph, params, syndromes)

    report = evaluation.metrics(predictions, dataset.labels(), graph, run.algo, run.kind)
    timing = dict(timing_stats(times), algo=run.algo, kind=run.kind, workers=run.workers)
    jsonio.write_ndjson(
        ({"timestamp": s.timestamp, "prediction": list(p), "labels": list(s.labels)} for s, p in zip(dataset, predictions)),
        run.out / PREDICTIONS_NAME)
    utils.write_text_file(report.to_csv(), run.out / METRICS_CSV_NAME)
    jsonio.write_file(report, run.out / METRICS_JSON_NAME)
    jsonio.write_file(timing, run.out / TIMING_NAME)
    config = {"dataset": run.dataset, "split": run.split, "algo": run.algo, "params": run.params, "budget": run.budget}
    write_manifest(run, "infer", config, algo=run.algo, split=run.split, samples=len(dataset))
    log.info("%s", report)
    jsonio.print_json({"metrics": report.to_config()["identification"], "timing": timing})
    return 0


def _pac_rows(name: str, bounds) -> List[dict]:
    return [dict(b.to_config(), slice=name) for b in bounds]


def diagnosability_cmd(run: RunConfig) -> Optional[int]:
    graph = load_graph(run, deterministic=True)
    budget = run.budget if run.budget is not None else diagnosability.DEFAULT_BUDGET
    policies = [run.policy] if run.policy else list(diagnosability.POLICIES)
    result = {"graph": run.graph, "kind": run.kind, "kappa": []}
    for policy in policies:
        try:
            report = diagnosability.kappa_report(graph, policy, run.semantics, run.max_k, budget)
            entry = dict(report.to_config(), complete=True)
        except percmon.BudgetExceededError as exc:
            log.warning("%s", exc)
            entry = dict(exc.partial.to_config(), policy=policy, complete=False)
        result["kappa"].append(entry)
    try:
        result["sufficient"] = diagnosability.sufficient_kappa(graph).to_config()
    except percmon.SemanticsError as exc:
        log.info("Sufficient conditions do not apply: %s", exc)
        result["sufficient"] = None

    rows = []
    if run.dataset:
        params = load_params(run)
        dataset = Dataset.load(run.dataset, run.split)
        dataset.check_graph(graph)
        predictions, _ = identify_all(run, load_graph(run, run.algo in (DETERMINISTIC, WEAKER_OR)), params, [s.syndrome for s in dataset])
        labels = dataset.labels()
        pac = {}
        for name, idx in evaluation.slice_indices(graph).items():
            if not idx:
                continue
            pairs = [([p[i] for i in idx], [int(l[i]) for i in idx]) for p, l in zip(predictions, labels)]
            h = sum(diagnosability.hamming(p, l) for p, l in pairs) / len(pairs)
            bounds = diagnosability.pac_curve(h, len(idx), len(pairs), run.delta)
            pac[name] = [b.to_config() for b in bounds]
            rows.extend(_pac_rows(name, bounds))
        result["pac"] = {"algo": run.algo, "split": run.split, "bounds": pac}
        utils.write_text_file(evaluation.rows_to_csv(rows, PAC_FIELDS), run.out / PAC_NAME)

    jsonio.write_file(result, run.out / DIAGNOSABILITY_NAME)
    config = {"policies": policies, "semantics": run.semantics, "max_k": run.max_k, "budget": budget,
              "dataset": run.dataset, "algo": run.algo if run.dataset else None, "delta": run.delta}
    write_manifest(run, "diagnosability", config)
    jsonio.print_json(result)
    return 0


def _wide_row(config: dict, task: str) -> dict:
    row = {"algo": config["algo"], "kind": config["kind"], "samples": config["samples"]}
    for name in evaluation.SLICES:
        for metric in ("accuracy", "precision", "recall"):
            row[f"{metric}_{name}"] = config[task][name][metric]
    return row


def report_cmd(run: RunConfig) -> Optional[int]:
    """One row per (algorithm, graph kind) in an identification and a detection table."""
    if not run.inputs:
        raise percmon.DataError("No infer outputs given", code="missing-input")
    directories = [pathlib.Path(i) for i in run.inputs]
    manifests = [manifest.read_manifest(d) for d in directories]
    manifest.check_consistent(manifests, ("graph",), [str(d) for d in directories])
    results, seen = [], {}
    for d in directories:
        config = jsonio.read_file(d / METRICS_JSON_NAME)
        key = (config["algo"], config["kind"])
        if key in seen:
            raise percmon.ReportConflictError(f"Both {seen[key]} and {d} hold results for {key[0]} on the {key[1]} graph")
        seen[key] = d
        results.append(config)
    results.sort(key=lambda c: (KINDS.index(c["kind"]) if c["kind"] in KINDS else len(KINDS), c["algo"]))

    fields = ["algo", "kind", "samples"] + [f"{m}_{s}" for s in evaluation.SLICES for m in ("accuracy", "precision", "recall")]
    tables = {}
    for task in (evaluation.IDENTIFICATION, evaluation.DETECTION):
        rows = [_wide_row(c, task) for c in results]
        utils.write_text_file(evaluation.rows_to_csv(rows, fields), run.out / f"{task}.csv")
        tables[task] = rows
    jsonio.write_file({"inputs": [str(d) for d in directories], "tables": tables}, run.out / REPORT_JSON_NAME)
    write_manifest(run, "report", {"inputs": [str(d) for d in directories]})
    jsonio.print_json(tables)
    return 0


def export_cmd(run: RunConfig) -> Optional[int]:
    graph = load_graph(run)
    params = load_params(run)
    dataset = Dataset.load(require_dataset(run), run.split)
    dataset.check_graph(graph)
    directory = run.out / "gnn"
    for n, sample in enumerate(dataset):
        exported = percmon.gnn_export(graph, sample.syndrome, params, sample.labels)
        exported.save(directory / f"{run.split}-{n:05d}.json")
    write_manifest(run, "export", {"dataset": run.dataset, "split": run.split, "params": run.params}, samples=len(dataset))
    jsonio.print_json({"directory": str(directory), "samples": len(dataset)})
    return 0


COMMANDS = {
    "generate": generate_cmd,
    "fit": fit_cmd,
    "infer": infer_cmd,
    "diagnosability": diagnosability_cmd,
    "report": report_cmd,
    "export": export_cmd,
}


def main(argv: Optional[Sequence[str]] = None):
    args = parse_arguments(argv)
    setup_logging(args)

    if args.subcommand not in COMMANDS:
        print("Please choose a command: " + ", ".join(COMMANDS), file=sys.stderr)
        sys.exit(2)

    code = None
    try:
        run = RunConfig.from_arguments(args, args.config)
        log.info("Running %s with seed %d", args.subcommand, run.seed)
        code = COMMANDS[args.subcommand](run)
        log.info("Finished %s", args.subcommand)
    except percmon.PercmonException as exc:
        print(jsonio.dumps(exc.to_envelope()), file=sys.stderr)
        code = 1
    except BrokenPipeError:
        pass
    except KeyboardInterrupt:
        code = 255

    sys.exit(code if code else 0)


if __name__ == "__main__":
    main()

# vim: set et sw=4 ts=4:
