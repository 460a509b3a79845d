"""
msalg - command line front end

    python -m msalg validate FILE
    python -m msalg check FILE [--check NAME ...]
    python -m msalg construct FILE {projlim,indlim,ultraproduct,reducedproduct} NAME [--filter F]
    python -m msalg gen [--seed N ...]

validate and check write their report to stdout (or --out); construct and
gen write an instance file there and, with --json, their report to stderr.
The exit code is 0 iff the report passes.
"""
import argparse
import hashlib
import sys
from functools import partial
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from pydantic import ValidationError

from .checks import CheckJob, CheckRunner, overall_status
from .config import settings
from .errors import DslError, MsalgError
from .generator import generate_text
from .logging_config import get_logger, setup_logging
from .metrics import metrics_collector
from .models import CheckOutcome, CheckStatus, ErrorResponse, GeneratorConfig, Report
from .order_filters import UffsMorphism, UffsObject, co_optimal_lift, uffs
from .retraction import (
    NaturalitySuiteInput,
    RetractionInstance,
    composition_check,
    cylinder_check,
    naturality_check,
    principal_shape_check,
    retraction_check,
    vote_structure_check,
)
from .sig_alg import is_globally_empty, relabel
from .sorted_core import element_label
from .spec_dsl import Declaration, InstanceFile, parse, serialize
from .systems_limits import (
    inductive_limit,
    projective_limit,
    prop25_check,
    prop28_check,
    prop29_check,
    reduced_product,
    ultraproduct_check,
)

logger = get_logger(__name__)

CHECKS = ("prop25", "prop28", "prop29", "retraction", "naturality", "cylinder", "composition")
CONSTRUCTIONS = ("projlim", "indlim", "ultraproduct", "reducedproduct")


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _skipped(name: str, subject: str, message: str) -> CheckOutcome:
    return CheckOutcome(name=name, subject=subject, status=CheckStatus.SKIPPED, message=message)


class CheckPlanner:
    """Turns the declarations of an instance file into check jobs, in declaration order"""

    def __init__(self, instance: InstanceFile, max_nodes: int):
        self.instance = instance
        self.max_nodes = max_nodes
        self.jobs: List[CheckJob] = []
        self.skipped: List[CheckOutcome] = []

    def _on(self, decl: Declaration, *kinds: str) -> List[Declaration]:
        """Declarations of ``kinds`` living on the same preorder as ``decl``"""
        on = decl.refs.get("on") or decl.refs.get("over")
        return [d for d in self.instance.of_kind(*kinds) if (d.refs.get("on") or d.refs.get("over")) == on]

    def _add(self, name: str, subject: str, run: Callable) -> None:
        self.jobs.append(CheckJob(name, subject, run))

    def plan(self, names: Sequence[str]) -> List[CheckJob]:
        for name in CHECKS:
            if name in names:
                getattr(self, f"_plan_{name}")()
        return self.jobs

    def _plan_prop25(self) -> None:
        for d in self.instance.of_kind("indsys"):
            self._add("prop25", d.name, partial(prop25_check, d.value, self.max_nodes))

    def _plan_prop28(self) -> None:
        for fam in self.instance.of_kind("family"):
            for f in self._on(fam, "filter"):
                if f.refs.get("form") == "principal":
                    self._add("prop28", f"{fam.name}/{f.name}",
                              partial(prop28_check, fam.value, f.refs["points"], self.max_nodes))

    def _plan_prop29(self) -> None:
        for fam in self.instance.of_kind("family"):
            for f in self._on(fam, "filter", "ultrafilter"):
                check = ultraproduct_check if f.kind == "ultrafilter" else prop29_check
                self._add("prop29", f"{fam.name}/{f.name}", partial(check, fam.value, f.value, self.max_nodes))

    def _ultrafilters(self, decl: Declaration, index):
        """Declared ultrafilters containing the final sections, else all of Uffs(I)"""
        declared = []
        for u in self._on(decl, "ultrafilter"):
            try:
                declared.append((u.name, UffsObject(index, u.value).ultra))
            except MsalgError:
                self.skipped.append(_skipped("retraction", f"{decl.name}/{u.name}",
                                             "ultrafilter does not contain the final sections"))
        if declared:
            return declared
        return [(obj.ultra.label(), obj.ultra) for obj in uffs(index)]

    def _plan_retraction(self) -> None:
        for d in self.instance.of_kind("projsys"):
            for label, ultra in self._ultrafilters(d, d.value.index):
                subject = f"{d.name}/{label}"
                for name, check in (("retraction", retraction_check),
                                    ("principal_shape", principal_shape_check),
                                    ("vote_structure", vote_structure_check)):
                    self._add(name, subject, partial(_on_instance, check, d.value, ultra))

    def _plan_naturality(self) -> None:
        for m in self.instance.of_kind("sysmap"):
            source = self.instance.get(m.refs["source"]).value
            target = self.instance.get(m.refs["target"]).value
            for obj in uffs(source.index):
                self._add("naturality", f"{m.name}/{obj.ultra.label()}",
                          partial(_naturality, source, target, m.value, obj.ultra))

    def _uffs_morphisms(self, iso: Declaration) -> List[UffsMorphism]:
        phi = iso.value
        found = []
        for obj in uffs(phi.source):
            try:
                found.append(UffsMorphism(obj, UffsObject(phi.target, co_optimal_lift(phi, obj.ultra)), phi))
            except MsalgError:
                continue
        return found

    def _systems_over(self, preorder_name: str) -> List[Declaration]:
        return [d for d in self.instance.of_kind("projsys") if d.refs["over"] == preorder_name]

    def _plan_cylinder(self) -> None:
        for iso in self.instance.of_kind("isomap"):
            morphisms = self._uffs_morphisms(iso)
            if not morphisms:
                self.skipped.append(_skipped("cylinder", iso.name, "not a Uffs morphism for any ultrafilter"))
            for phi in morphisms:
                for sys_decl in self._systems_over(iso.refs["target"]):
                    self._add("cylinder", f"{iso.name}/{phi.source.ultra.label()}/{sys_decl.name}",
                              partial(cylinder_check, phi, sys_decl.value))

    def _plan_composition(self) -> None:
        isomaps = self.instance.of_kind("isomap")
        for inner in isomaps:
            for outer in isomaps:
                if inner.refs["target"] != outer.refs["source"]:
                    continue
                for phi in self._uffs_morphisms(inner):
                    psi = next((m for m in self._uffs_morphisms(outer) if m.source == phi.target), None)
                    if psi is None:
                        continue
                    for sys_decl in self._systems_over(outer.refs["target"]):
                        self._add("composition",
                                  f"{inner.name};{outer.name}/{phi.source.ultra.label()}/{sys_decl.name}",
                                  partial(composition_check, phi, psi, sys_decl.value))


def _on_instance(check, system, ultra):
    return check(RetractionInstance(system, ultra))


def _naturality(source, target, components, ultra):
    return naturality_check(NaturalitySuiteInput(RetractionInstance(source, ultra), target, components))


def _load(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return text, parse(text)


def _failure_report(command: List[str], error: Exception, text: Optional[str] = None) -> Report:
    if isinstance(error, DslError):
        return Report(command=command, instance_digest=digest(text) if text is not None else None,
                      status=CheckStatus.FAILED, diagnostics=error.diagnostics,
                      error=ErrorResponse(error=error.message, code=error.code))
    if isinstance(error, MsalgError):
        return Report(command=command, status=CheckStatus.FAILED,
                      error=ErrorResponse(error=error.message, detail=str(error.witness or ""), code=error.code))
    return Report(command=command, status=CheckStatus.FAILED,
                  error=ErrorResponse(error="Internal error", detail=str(error), code="INTERNAL_ERROR"))


def cmd_validate(args, command: List[str]) -> Report:
    """Parse and run every structural validator"""
    text, instance = _load(args.file)
    verdicts = []
    for d in instance:
        witness = {"kind": d.kind}
        algebras = []
        if d.kind == "algebra":
            algebras = [d.value]
        elif d.kind in ("projsys", "indsys", "family"):
            algebras = list((d.value.algebras if d.kind != "family" else d.value).values())
        if algebras:
            witness["globally_empty"] = sum(1 for A in algebras if is_globally_empty(A))
        verdicts.append(CheckOutcome(name="structure", subject=d.name, status=CheckStatus.PASSED, witness=witness))
    return Report(command=command, instance_digest=digest(text), status=CheckStatus.PASSED, verdicts=verdicts)


def cmd_check(args, command: List[str]) -> Report:
    """Run the named verdict operations on every applicable declaration"""
    text, instance = _load(args.file)
    names = CHECKS if not args.check or "all" in args.check else tuple(args.check)
    planner = CheckPlanner(instance, args.max_iso_search)
    jobs = planner.plan(names)
    logger.info("running checks", extra={"instance_digest": digest(text), "nodes": len(jobs)})
    outcomes = CheckRunner().run(jobs) + planner.skipped
    return Report(command=command, instance_digest=digest(text), status=overall_status(outcomes), verdicts=outcomes)


def cmd_construct(args, command: List[str]) -> Report:
    """Compute a limit or reduced product and append it as a new algebra declaration"""
    text, instance = _load(args.file)
    decl = instance.get(args.name)
    expected = {"projlim": "projsys", "indlim": "indsys", "ultraproduct": "family", "reducedproduct": "family"}
    if decl.kind != expected[args.what]:
        raise MsalgError(f"{args.name} is a {decl.kind}, {args.what} needs a {expected[args.what]}")
    if args.what == "projlim":
        apex = projective_limit(decl.value).apex
    elif args.what == "indlim":
        apex = inductive_limit(decl.value).apex
    else:
        kinds = ("ultrafilter",) if args.what == "ultraproduct" else ("filter", "ultrafilter")
        filters = [f for f in instance.of_kind(*kinds) if f.refs["on"] == decl.refs["on"]]
        if args.filter:
            filters = [f for f in filters if f.name == args.filter]
        if not filters:
            raise MsalgError(f"No {' or '.join(kinds)} on the preorder of {args.name}")
        apex = reduced_product(decl.value, filters[0].value)
    copy, iso = relabel(apex)
    member = next(iter(decl.value.algebras.values())) if decl.kind != "family" else next(iter(decl.value.values()))
    sig_name = next(d.name for d in instance.of_kind("signature") if d.value == member.sig)
    new_name = f"{args.name}_{args.what}"
    instance = instance.with_declaration(Declaration("algebra", new_name, copy, {"sig": sig_name}))
    _write(args.out, serialize(instance))
    witness = {"declaration": new_name, "size": copy.carrier.size(),
               "elements": {s: {iso(s, x): element_label(x) for x in apex.carrier.carrier(s)} for s in apex.sorts}}
    outcome = CheckOutcome(name=args.what, subject=args.name, status=CheckStatus.PASSED, witness=witness)
    return Report(command=command, instance_digest=digest(text), status=CheckStatus.PASSED, verdicts=[outcome])


def cmd_gen(args, command: List[str]) -> Report:
    """Emit a seeded random instance"""
    config = GeneratorConfig(
        seed=args.seed,
        sorts=args.sorts,
        carrier_size=args.carrier_size,
        ops=args.ops,
        index_size=args.index_size,
        max_arity=args.max_arity,
        max_tops=args.max_tops,
        force_constant_support=args.force_constant_support,
        force_surjective_transitions=args.force_surjective_transitions,
        inject_support_violation=args.inject_support_violation,
    )
    text = generate_text(config)
    _write(args.out, text)
    outcome = CheckOutcome(name="gen", subject=f"seed={config.seed}", status=CheckStatus.PASSED,
                           witness=config.model_dump())
    return Report(command=command, instance_digest=digest(text), status=CheckStatus.PASSED, verdicts=[outcome])


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=settings.APP_NAME, description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--out", help="write the primary output to this file")
    common.add_argument("--max-iso-search", type=int, default=settings.MAX_ISO_SEARCH,
                        help="node cap for isomorphism backtracking")
    common.add_argument("--metrics-out", help="write Prometheus metrics to this file")
    common.add_argument("--log-level", help="override MSALG_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="run the structural validators")
    p.add_argument("file")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("check", parents=[common], help="run verdict operations")
    p.add_argument("file")
    p.add_argument("--check", action="append", choices=("all",) + CHECKS, help="check to run (repeatable)")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("construct", parents=[common], help="emit a computed algebra")
    p.add_argument("file")
    p.add_argument("what", choices=CONSTRUCTIONS)
    p.add_argument("name")
    p.add_argument("--filter", help="filter or ultrafilter declaration to use")
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser("gen", parents=[common], help="generate a seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sorts", type=int, default=2)
    p.add_argument("--carrier-size", type=int, default=3)
    p.add_argument("--ops", type=int, default=2)
    p.add_argument("--index-size", type=int, default=3)
    p.add_argument("--max-arity", type=int, default=2)
    p.add_argument("--max-tops", type=int, default=2)
    p.add_argument("--force-constant-support", action="store_true")
    p.add_argument("--force-surjective-transitions", action="store_true")
    p.add_argument("--inject-support-violation", action="store_true")
    p.set_defaults(handler=cmd_gen)
    return parser


def _summary(report: Report) -> str:
    lines = []
    for v in report.verdicts:
        lines.append(f"{v.status.value.upper():8} {v.name:16} {v.subject}" + (f"  {v.message}" if v.message else ""))
    for d in report.diagnostics:
        lines.append(d.render())
    if report.error:
        lines.append(f"error: [{report.error.code}] {report.error.error}")
    lines.append(f"{report.status.value.upper()}")
    return "\n".join(lines) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    command = [settings.APP_NAME] + list(argv if argv is not None else sys.argv[1:])
    emits_instance = args.command in ("construct", "gen")
    try:
        report = args.handler(args, command)
    except ValidationError as e:
        logger.error(f"Invalid generator configuration: {e}")
        report = Report(command=command, status=CheckStatus.FAILED,
                        error=ErrorResponse(error="Invalid generator configuration", detail=str(e),
                                            code="INVALID_CONFIG"))
    except (MsalgError, KeyError, OSError) as e:
        if isinstance(e, KeyError):
            e = MsalgError(f"Unknown declaration {e.args[0]}")
        elif isinstance(e, OSError):
            e = MsalgError(f"Cannot read {e.filename}: {e.strerror}")
        logger.error(f"{args.command} failed: {e}")
        text = None
        if isinstance(e, DslError):
            try:
                text = Path(args.file).read_text(encoding="utf-8")
            except OSError:
                pass
        report = _failure_report(command, e, text)
    except Exception as e:
        logger.error(f"Unhandled exception: {str(e)}", exc_info=True)
        report = _failure_report(command, e)

    report.timings = metrics_collector.timings()
    if args.metrics_out and settings.ENABLE_METRICS:
        Path(args.metrics_out).write_bytes(metrics_collector.exposition())

    if args.json:
        stream = sys.stderr if emits_instance else None
        rendered = report.to_json() + "\n"
        if stream is not None:
            stream.write(rendered)
        elif args.out:
            Path(args.out).write_text(rendered, encoding="utf-8")
        else:
            sys.stdout.write(rendered)
    elif emits_instance:
        if not report.ok:
            sys.stderr.write(_summary(report))
    elif args.out:
        Path(args.out).write_text(_summary(report), encoding="utf-8")
    else:
        sys.stdout.write(_summary(report))
    return 0 if report.ok else 1
