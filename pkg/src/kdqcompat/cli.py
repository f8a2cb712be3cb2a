"""Command-line front end.

Exit codes: 0 ok/classical, 1 input error, 2 structure violation,
3 non-classicality (incompatible or witnessed), 4 resource limit.
"""
import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .compat import DEFAULT_MAX_NODES, check_closure, check_enumerated
from .errors import CapacityError, KDQError, ParseError, ResourceError, ValidationError
from .kdq import kdq_distribution, scenario_from_dict
from .model import Model, classify
from .witness import SearchBudget, Verdict, screen_darwinism

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STRUCTURE = 2
EXIT_NONCLASSICAL = 3
EXIT_RESOURCE = 4

LOG = logging.getLogger("kdqcompat")


@dataclass(frozen=True)
class ModelFile:
    path: Path
    model: Model

    @classmethod
    def load(cls, path):
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValidationError("model file must hold a JSON object")
        return cls(path, Model.from_dict(data))


def _emit(payload, args):
    text = json.dumps(payload, indent=2)
    if getattr(args, "output", None):
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_classify(args):
    mf = ModelFile.load(args.model)
    report = classify(mf.model.hamiltonian, mf.model.partition)
    _emit(report.to_dict(), args)
    return EXIT_OK if report.hform_ok else EXIT_STRUCTURE


def cmd_check(args):
    mf = ModelFile.load(args.model)
    report = classify(mf.model.hamiltonian, mf.model.partition)
    try:
        if args.method == "closure":
            result = check_closure(report)
        else:
            result = check_enumerated(report, args.depth, args.max_nodes)
    except ResourceError as exc:
        partial = exc.partial.to_dict() if exc.partial is not None else None
        _emit({"error": str(exc), "partial": partial}, args)
        return EXIT_RESOURCE
    payload = result.to_dict()
    payload["hform_ok"] = report.hform_ok
    _emit(payload, args)
    if not report.hform_ok:
        return EXIT_STRUCTURE
    return EXIT_OK if result.compatible else EXIT_NONCLASSICAL


def cmd_kdq(args):
    path = Path(args.scenario)
    data = json.loads(path.read_text(encoding="utf-8"))
    model = None
    if isinstance(data.get("model"), str):
        model = ModelFile.load(path.parent / data["model"]).model
    scenario = scenario_from_dict(data, model)
    dist = kdq_distribution(scenario)
    _emit(dist.to_dict(), args)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([*dist.blocks, "q_re", "q_im", "tpm"])
            for idx, q, p in dist.rows():
                writer.writerow([*idx, repr(q.real), repr(q.imag), repr(p)])
    return EXIT_OK


def cmd_screen(args):
    mf = ModelFile.load(args.model)
    budget = SearchBudget(args.samples, (args.tmin, args.tmax), args.ranks, args.seed,
                          args.observers)
    result = screen_darwinism(mf.model, budget, args.threshold, threads=args.threads)
    _emit(result.to_dict(), args)
    return EXIT_NONCLASSICAL if result.verdict is Verdict.CANNOT_SUPPORT_QD else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kdqcompat",
        description="Classical compatibility of disjoint measurements in multipartite models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="bucket Hamiltonian terms by subsystem")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("check", help="decide compatibility from commutator constraints")
    p.add_argument("model")
    p.add_argument("--method", choices=["closure", "enumerate"], default="closure")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES,
                   help="enumeration budget in commutator evaluations")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("kdq", help="KDQ and TPM distributions of a scenario")
    p.add_argument("scenario")
    p.add_argument("--csv", help="also write the outcome table as CSV")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_kdq)

    p = sub.add_parser("screen", help="randomized Darwinism screening test")
    p.add_argument("model")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--tmin", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--ranks", choices=["rank1", "binary", "mixed"], default="rank1")
    p.add_argument("--observers", type=int, default=2,
                   help="largest number of blocks measured per sample")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_screen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc.pointer()}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        print("error: invalid input", file=sys.stderr)
        for failure in exc.failures:
            print(f"  - {failure}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (OSError, json.JSONDecodeError, KDQError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
