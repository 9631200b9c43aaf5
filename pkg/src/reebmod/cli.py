"""Command line front end: ``reebmod <command> <manifest> [options]``.

Exit status: 0 when no check fails, 1 when some check fails, 2 on usage or
manifest errors.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from typing import Sequence

import yaml

from . import manifest as mf
from .oracle import SampleSpec
from .runner import COMMANDS, Report, Runner
from .tensor import Variance

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


_HELP = {
    "check-jacobi": "check [pi, pi] = 0",
    "modular": "modular field: invariance and rescale law",
    "reeb": "Reeb class of the foliation",
    "mean-curvature": "mean curvature, eta form and conformal rescaling",
    "dpi": "d_pi squares to zero and matches the Schouten bracket",
    "bridge-check": "chain map and modular field against the Reeb class",
    "morita-check": "dual pair axioms and tangency",
    "morita-transfer": "transfer a vector field through a dual pair",
    "suite": "every check that applies to the manifest",
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("sampling")
    g.add_argument("--samples", type=int, default=SampleSpec.count, help="oracle sample points (default %(default)s)")
    g.add_argument("--seed", type=int, default=SampleSpec.seed, help="oracle seed (default %(default)s)")
    g.add_argument("--random-seed", action="store_true", help="draw a fresh seed and print it")
    g.add_argument("--tol-abs", type=float, default=SampleSpec.tol_abs)
    g.add_argument("--tol-rel", type=float, default=SampleSpec.tol_rel)
    g.add_argument("--box", type=float, nargs=2, metavar=("LOW", "HIGH"), default=list(SampleSpec.box))
    out = common.add_argument_group("checks and output")
    out.add_argument("--format", choices=("text", "json"), default="text")
    out.add_argument("--random-inputs", type=int, default=3, help="random inputs per degree in property checks")
    out.add_argument("--no-confirm", action="store_true", help="skip numeric confirmation of symbolic verdicts")

    parser = argparse.ArgumentParser(prog="reebmod", description="Symbolic checks for Poisson structures and foliations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=_HELP[name])
        p.add_argument("manifest", help="manifest file or name of a bundled example")
        if name == "bridge-check":
            p.add_argument("--normal", help="normal orientation, YAML (list of components or literal)")
            p.add_argument("--complement", help="complement fields, YAML list of component lists")
        if name == "morita-transfer":
            p.add_argument("--xi1", required=True, help="vector field on P1, YAML list of components")
            p.add_argument("--F", dest="F", required=True, help="function on W")
    sub.add_parser("gallery", parents=[common], help="run the suite on every bundled example")
    sub.add_parser("list", help="list the bundled examples")
    return parser


def _spec(args) -> SampleSpec:
    seed = args.seed
    if args.random_seed:
        seed = secrets.randbelow(2**31)
        print(f"seed: {seed}", file=sys.stderr)
    return SampleSpec(count=args.samples, box=tuple(args.box), seed=seed, tol_abs=args.tol_abs, tol_rel=args.tol_rel)


def _yaml_option(text: str, name: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise mf.ManifestError(f"--{name}", f"invalid YAML: {exc}") from exc


def _options(args, m: mf.Manifest) -> dict:
    opts = {}
    if args.command == "bridge-check":
        if args.normal is not None:
            q = m.chart.n - len(m.foliation.frame) if m.foliation else 1
            opts["normal"] = mf.tensor(_yaml_option(args.normal, "normal"), m.chart, Variance.FORM, q, "--normal")
        if args.complement is not None:
            node = _yaml_option(args.complement, "complement")
            if not isinstance(node, list):
                raise mf.ManifestError("--complement", "expected a list of vector fields")
            opts["complement"] = [mf.tensor(v, m.chart, Variance.MULTIVECTOR, 1, f"--complement[{i}]") for i, v in enumerate(node)]
    elif args.command == "morita-transfer":
        if m.dual_pair is None:
            raise mf.ManifestError("dual_pair", "manifest has no dual pair")
        P1 = m.dual_pair.p1_pi.chart
        opts["xi1"] = mf.tensor(_yaml_option(args.xi1, "xi1"), P1, Variance.MULTIVECTOR, 1, "--xi1")
        opts["F"] = mf._expr(m.dual_pair.omega.chart, args.F, "--F")
    return opts


def _emit(reports: list[Report], fmt: str, gallery: bool):
    if fmt == "json":
        if gallery:
            doc = {"gallery": [r.to_dict() for r in reports], "ok": all(r.ok for r in reports)}
        else:
            doc = reports[0].to_dict()
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    else:
        for r in reports:
            print(r.to_text())


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "list":
        for path in mf.bundled():
            m = mf.load(path)
            print(f"{path.stem:24s} {m.description}")
        return EXIT_OK
    try:
        spec = _spec(args)
    except ValueError as exc:
        print(f"reebmod: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "gallery":
            manifests = [mf.load(p) for p in mf.bundled()]
            reports = [
                Runner(m, spec, random_inputs=args.random_inputs, confirm=not args.no_confirm).run("suite")
                for m in manifests
            ]
        else:
            m = mf.load(mf.resolve(args.manifest))
            opts = _options(args, m)
            runner = Runner(m, spec, random_inputs=args.random_inputs, confirm=not args.no_confirm)
            reports = [runner.run(args.command, **opts)]
    except mf.ManifestError as exc:
        print(f"reebmod: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(reports, args.format, args.command == "gallery")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
