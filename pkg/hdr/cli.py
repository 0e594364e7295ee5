"""
Command-line driver: `python -m hdr refine|check|solve|plot|adapt|serve`.

Reports are printed to stdout as JSON; logs go to stderr and the log files.
Exit codes: 0 clean, 1 finding, 2 usage / parse / precondition error.
"""

import argparse
import json
import logging
import sys
from typing import Any, Optional, Sequence

from hdr.core.config import get_settings
from hdr.core.constants import MAXWELL_SIDE
from hdr.core.enums import BasisVariant, CheckKind, ExitCode, ProblemKind, ScalarMode
from hdr.core.logging_config import setup_logging
from hdr.models.hierarchy import hierarchical_mesh
from hdr.schemas.reports import LaplaceSummary, MaxwellSummary
from hdr.services.adaptive import AdaptiveConfig, adaptive_loop
from hdr.services.mesh_io import (
    DOMAIN_ERRORS,
    document_to_domains,
    domains_to_document,
    load_document,
    load_marks,
    refine_domains,
    render_svg,
    run_check,
    save_document,
    write_csv,
)
from hdr.services.solvers import (
    assemble,
    circular_front_field,
    polynomial_field,
    solve_maxwell,
    solve_vector_laplace,
    spurious_eigenvalues,
)

logger = logging.getLogger(__name__)

SOLUTIONS = {"polynomial": polynomial_field, "front": circular_front_field}


def _on_off(value: str) -> bool:
    if value.lower() in ("on", "true", "1"):
        return True
    if value.lower() in ("off", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on|off, got {value!r}")


def _admissible(value: str) -> Optional[int]:
    if value.lower() == "off":
        return None
    try:
        m = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer class or off, got {value!r}") from None
    if m < 2:
        raise argparse.ArgumentTypeError("admissibility class must be at least 2")
    return m


def _emit(payload: Any) -> None:
    print(json.dumps(payload, indent=2, default=str))


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------


def cmd_refine(args: argparse.Namespace) -> int:
    document = load_document(args.input)
    domains = document_to_domains(document)
    marks = load_marks(args.marked) if args.marked else document.marks()
    refined, summary = refine_domains(domains, marks, exact=args.exact, admissible_class=args.admissible)
    save_document(domains_to_document(refined), args.output)
    _emit(summary.model_dump(mode="json"))
    return ExitCode.FINDING if summary.h1_risk else ExitCode.CLEAN


def cmd_check(args: argparse.Namespace) -> int:
    domains = document_to_domains(load_document(args.input), validate=False)
    result = run_check(domains, CheckKind(args.what), ScalarMode(args.mode), BasisVariant(args.variant))
    _emit(result.model_dump(mode="json"))
    return ExitCode.CLEAN if result.clean else ExitCode.FINDING


def cmd_solve(args: argparse.Namespace) -> int:
    domains = document_to_domains(load_document(args.input))
    variant = BasisVariant(args.variant)
    if ProblemKind(args.problem) is ProblemKind.MAXWELL:
        system = assemble(domains, variant, side=MAXWELL_SIDE)
        result = solve_maxwell(system)
        spurious = spurious_eigenvalues(result.nonzero[: args.count])
        if args.out:
            flagged = set(spurious.tolist())
            write_csv(
                args.out,
                ["index", "eigenvalue", "spurious"],
                ((k + 1, f"{v:.12g}", int(v in flagged)) for k, v in enumerate(result.nonzero)),
            )
        summary = MaxwellSummary.from_result(system.dofs[1], result, spurious.tolist(), args.count)
        _emit(summary.model_dump(mode="json"))
        return ExitCode.FINDING if spurious.size else ExitCode.CLEAN

    solution = SOLUTIONS[args.solution]()
    system = assemble(domains, variant)
    result = solve_vector_laplace(system, solution)
    if args.out:
        write_csv(
            args.out,
            ["level", "e1", "e2", "l2_error_squared"],
            (
                (cell.level, cell.element.e1, cell.element.e2, f"{err:.12g}")
                for cell, err in zip(system.quadrature.elements, result.element_errors)
            ),
        )
    _emit(LaplaceSummary.from_result(solution.name, system.dofs, result).model_dump(mode="json"))
    return ExitCode.FINDING if result.singular else ExitCode.CLEAN


def cmd_plot(args: argparse.Namespace) -> int:
    domains = document_to_domains(load_document(args.input))
    count = render_svg(domains, args.out)
    _emit({"elements": count, "max_level": domains.max_level, "out": str(args.out)})
    return ExitCode.CLEAN


def cmd_adapt(args: argparse.Namespace) -> int:
    config = AdaptiveConfig(
        theta=args.theta,
        max_steps=args.steps,
        exact=args.exact,
        degree=args.degree,
        base_intervals=args.base,
    )
    history = adaptive_loop(config)
    rows = [
        {
            "step": s.step,
            "dofs": s.dofs,
            "l2_error": s.l2_error,
            "h1": s.h1,
            "marked": s.marked_elements,
            "active_elements": len(hierarchical_mesh(s.domains)),
        }
        for s in history
    ]
    if args.out:
        write_csv(args.out, ["step", "dofs", "l2_error", "h1"], ((r["step"], r["dofs"], f"{r['l2_error']:.12g}", r["h1"]) for r in rows))
    _emit(rows)
    return ExitCode.FINDING if any(s.h1 for s in history) else ExitCode.CLEAN


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("hdr.main:app", host=args.host, port=args.port)
    return ExitCode.CLEAN


# -----------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="hdr", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL (DEBUG, INFO, WARNING, ERROR).")
    sub = parser.add_subparsers(dest="command", required=True)

    refine = sub.add_parser("refine", help="Refine marked elements of a mesh document.")
    refine.add_argument("input", help="Mesh document (JSON).")
    refine.add_argument("--marked", default=None, help="Mark file; defaults to the marks of the input document.")
    refine.add_argument("--exact", type=_on_off, default=True, help="on|off (default on).")
    refine.add_argument("--admissible", type=_admissible, default=None, help="Admissibility class M or off.")
    refine.add_argument("-o", "--output", required=True, help="Output mesh document.")
    refine.set_defaults(func=cmd_refine)

    check = sub.add_parser("check", help="Run a check; exit 1 on findings.")
    check.add_argument("input")
    check.add_argument("--what", choices=[k.value for k in CheckKind], default=CheckKind.PAIRS.value)
    check.add_argument("--mode", choices=[m.value for m in ScalarMode], default=ScalarMode.RATIONAL.value)
    check.add_argument("--variant", choices=[v.value for v in BasisVariant], default=BasisVariant.THB.value)
    check.set_defaults(func=cmd_check)

    solve = sub.add_parser("solve", help="Vector Laplace or Maxwell eigenproblem on a mesh document.")
    solve.add_argument("input")
    solve.add_argument("--problem", choices=[p.value for p in ProblemKind], required=True)
    solve.add_argument("--solution", choices=sorted(SOLUTIONS), default="polynomial", help="Laplace manufactured field.")
    solve.add_argument("--variant", choices=[v.value for v in BasisVariant], default=BasisVariant.THB.value)
    solve.add_argument("--count", type=int, default=8, help="Low eigenvalues checked against m²+n² (Maxwell).")
    solve.add_argument("--out", default=None, help="CSV output.")
    solve.set_defaults(func=cmd_solve)

    plot = sub.add_parser("plot", help="SVG of the hierarchical mesh.")
    plot.add_argument("input")
    plot.add_argument("--out", required=True)
    plot.set_defaults(func=cmd_plot)

    adapt = sub.add_parser("adapt", help="Adaptive loop on the circular-front field.")
    adapt.add_argument("--steps", type=int, default=settings.ADAPTIVE_MAX_STEPS)
    adapt.add_argument("--theta", type=float, default=settings.DORFLER_THETA)
    adapt.add_argument("--exact", type=_on_off, default=True)
    adapt.add_argument("--degree", type=int, default=3)
    adapt.add_argument("--base", type=int, default=8, help="Base intervals per direction.")
    adapt.add_argument("--out", default=None, help="CSV error history.")
    adapt.set_defaults(func=cmd_adapt)

    serve = sub.add_parser("serve", help="Run the HTTP API with uvicorn.")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entrypoint."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(log_level=args.log_level)
    try:
        return int(args.func(args))
    except (*DOMAIN_ERRORS, OSError) as exc:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(f"hdr {args.command}: {exc}", file=sys.stderr)
        return int(ExitCode.USAGE)


if __name__ == "__main__":
    raise SystemExit(main())
