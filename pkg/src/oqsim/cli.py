"""Command line driver: experiment configs in, CSV/JSON artifacts out.

Exit codes: 0 on success, 1 when more than 10% of grid points failed
(partial result; the CSVs still contain the error rows), 2 on fatal
problems such as unreadable configs or a kind the subcommand rejects.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from oqsim.encoder import RoundCircuit, reference_output_z
from oqsim.grid import encode_grid
from oqsim.harness import KINDS, ExperimentConfig, run

# `simulate` dispatches any experiment kind; the named subcommands insist
# on their own family so a mixed-up config fails loudly instead of
# silently running the wrong study.
COMMAND_KINDS = {
    "simulate": set(KINDS),
    "sweep": {"noiseless-sweep", "noisy-sweep"},
    "gaussian": {"phase-map"},
    "bounds": {"bounds-table"},
    "remainder": {"remainder-check"},
}


def _fatal(message: str) -> int:
    print(f"workbench: {message}", file=sys.stderr)
    return 2


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _run_experiment(command: str, args) -> int:
    try:
        data = _load_json(args.config)
    except OSError as exc:
        return _fatal(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        return _fatal(f"config is not valid JSON: {exc}")
    try:
        config = ExperimentConfig.from_json_dict(data)
    except (ValueError, TypeError, KeyError) as exc:
        return _fatal(f"bad config: {exc}")
    allowed = COMMAND_KINDS[command]
    if config.kind not in allowed:
        return _fatal(
            f"'{command}' only accepts kinds {sorted(allowed)}, "
            f"got '{config.kind}'"
        )
    try:
        result = run(config, workers=args.workers)
    except Exception as exc:
        return _fatal(f"{config.kind} failed: {exc}")
    outdir = Path(args.out) if args.out else Path(config.output)
    try:
        result.write(outdir)
        (outdir / "config.json").write_text(
            json.dumps(config.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        return _fatal(f"cannot write results: {exc}")
    print(
        f"{config.kind}: {len(result.rows)} rows "
        f"({result.failed_count} failed) -> {outdir}"
    )
    return result.status_code


def _run_encode_circuit(args) -> int:
    try:
        data = _load_json(args.config)
    except OSError as exc:
        return _fatal(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        return _fatal(f"config is not valid JSON: {exc}")
    try:
        circuit = RoundCircuit.from_json_dict(data)
        output_row = data.get("output_row")
        encoding = encode_grid(
            circuit, None if output_row is None else int(output_row)
        )
        z_ref = reference_output_z(circuit)
    except (ValueError, TypeError, KeyError) as exc:
        return _fatal(f"bad circuit: {exc}")
    payload = encoding.to_json_dict()
    summary = {
        "qubits": circuit.qubit_count,
        "rounds": circuit.round_count,
        "counts": payload["counts"],
        "observable_site": payload["observable_site"],
        "z_reference": z_ref,
    }
    outdir = Path(args.out) if args.out else Path("results")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "encoding.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (outdir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        return _fatal(f"cannot write results: {exc}")
    total = sum(payload["counts"].values())
    print(f"encode-circuit: {total} jump operators -> {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="workbench",
        description="Numerical workbench for analogue open-system simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "simulate": "run any experiment kind from a config",
        "sweep": "noiseless or noisy observable-error sweeps",
        "gaussian": "boundary-chain correlation phase map",
        "bounds": "simulator budget table",
        "remainder": "remainder and excitation diagnostics",
    }
    for name, desc in descriptions.items():
        cmd = sub.add_parser(name, help=desc)
        cmd.add_argument("--config", required=True, help="experiment JSON")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--workers", type=int, default=1,
                         help="parallel grid-point workers")
    enc = sub.add_parser("encode-circuit",
                         help="grid-encode a layered circuit to JSON")
    enc.add_argument("--config", required=True, help="circuit JSON")
    enc.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "encode-circuit":
        return _run_encode_circuit(args)
    return _run_experiment(args.command, args)


if __name__ == "__main__":
    raise SystemExit(main())
