import os
from hopf_flow.config import get_settings

settings = get_settings()

# BLAS pools are sized at numpy import time
for _variable in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_variable, str(settings.HOPF_FLOW_THREADS))

import argparse  # noqa: E402
import sys  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import List, Optional  # noqa: E402
from hopf_flow.core.verification import verify_all  # noqa: E402
from hopf_flow.core.workflow import FlowRunWorkflow, curve_info, torus_check  # noqa: E402
from hopf_flow.exceptions.flow_exceptions import ConfigError, ParseError, StepFailureError  # noqa: E402
from hopf_flow.exceptions.geometry_exceptions import HopfFlowBaseException  # noqa: E402
from hopf_flow.utils.io import load_run_config, write_json  # noqa: E402
from hopf_flow.utils.logger import logger  # noqa: E402

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_INPUT_ERROR = 2
EXIT_STEP_FAILURE = 3


def _flow_run(args: argparse.Namespace) -> int:
    summary = FlowRunWorkflow(load_run_config(args.config)).run()
    print(summary.model_dump_json(indent=2))
    return EXIT_OK


def _curve_info(args: argparse.Namespace) -> int:
    info = curve_info(args.snapshot, args.differentiation)
    if args.output:
        write_json(info, args.output)
    print(info.model_dump_json(indent=2))
    return EXIT_OK


def _torus_check(args: argparse.Namespace) -> int:
    snapshot = Path(args.snapshot)
    output = Path(args.output) if args.output else snapshot.with_name(f"{snapshot.stem}_torus_check.json")
    mesh_path = Path(args.mesh) if args.mesh else None
    report = torus_check(snapshot, args.fiber_res, args.differentiation, mesh_path)
    write_json(report, output)
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def _verify_all(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    report = verify_all(config, only=args.only)
    print(report.model_dump_json(indent=2))
    return EXIT_OK if report.passed else EXIT_DOMAIN_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hopf-flow",
        description="Degenerate elastic flow of curves on S2 and its Hopf-torus lift",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    flow_run = commands.add_parser("flow-run", help="Run the flow from a key=value config file")
    flow_run.add_argument("config")
    flow_run.set_defaults(handler=_flow_run)

    info = commands.add_parser("curve-info", help="Energy, bounds and modulus of a curve snapshot")
    info.add_argument("snapshot")
    info.add_argument("--output", help="Also write the report as JSON here")
    info.add_argument("--differentiation", choices=["stencil", "fourier"])
    info.set_defaults(handler=_curve_info)

    torus = commands.add_parser("torus-check", help="Verify the Hopf-torus identities for a snapshot")
    torus.add_argument("snapshot")
    torus.add_argument("--fiber-res", type=int, default=64, dest="fiber_res")
    torus.add_argument("--output", help="Residual report path (default: next to the snapshot)")
    torus.add_argument("--mesh", help="Also export the torus mesh here")
    torus.add_argument("--differentiation", choices=["stencil", "fourier"])
    torus.set_defaults(handler=_torus_check)

    verify = commands.add_parser("verify-all", help="Run the acceptance suite and write acceptance.json")
    verify.add_argument("config")
    verify.add_argument("--only", nargs="+", help="Run only these checks")
    verify.set_defaults(handler=_verify_all)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except StepFailureError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_STEP_FAILURE
    except HopfFlowBaseException as e:
        logger.error("Command failed", extra={"props": {"command": args.command, "error": e.message,
                                                        "details": e.details}})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
