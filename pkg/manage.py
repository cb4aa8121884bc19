#!/usr/bin/env python3
"""
Command-line entry point for the privacy lab.

Each subcommand builds a handler event from its flags, runs the handler
locally and prints the response body. The exit code is non-zero when the
handler answers with a status code of 400 or above.

Examples:
    python manage.py run --config acceptance_baseline --set seed=2
    python manage.py gen-data --config distillmd --run-dir runs/debug
    python manage.py report runs/acceptance/seed-1/none runs/acceptance/seed-1/distillmd
"""
import argparse
import json
import sys
from typing import Any, Callable, Dict, List, Optional

from rich.console import Console
from rich.table import Table

from src.functions.attack.handler import attack
from src.functions.distill.handler import distill
from src.functions.evaluate.handler import evaluate
from src.functions.gen_data.handler import gen_data
from src.functions.memorize_exp.handler import memorize_exp
from src.functions.report.handler import report
from src.functions.run_experiment.handler import run_experiment
from src.functions.sample.handler import sample
from src.functions.train.handler import train
from src.functions.verify.handler import verify

console = Console()

# Subcommands that run one pipeline stage from a config
STAGE_COMMANDS: Dict[str, Callable] = {
    'gen-data': gen_data,
    'train': train,
    'distill': distill,
    'sample': sample,
    'attack': attack,
    'eval': evaluate,
    'run': run_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Membership inference lab for diffusion models')
    subparsers = parser.add_subparsers(dest='command', required=True)

    def add_config_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            '-c', '--config', required=True,
            help='Path to a JSON config or name of a shipped config',
        )
        sub.add_argument(
            '-s', '--set', dest='overrides', action='append', default=[],
            metavar='KEY=VALUE', help='Override a config value (repeatable)',
        )

    for name in STAGE_COMMANDS:
        sub = subparsers.add_parser(name, help=f'Run the {name} stage')
        add_config_args(sub)
        sub.add_argument('--run-dir', default=None, help='Override the run directory')

    sub = subparsers.add_parser('memorize-exp', help='Run the memorization experiment')
    add_config_args(sub)
    sub.add_argument(
        '--arms', nargs='+', default=None, choices=['none', 'distillmd', 'dualmd'],
        help='Defense arms to run',
    )
    sub.add_argument('--output-dir', default=None, help='Override the artifact root')

    sub = subparsers.add_parser('report', help='Compare run manifests')
    sub.add_argument('manifests', nargs='+', help='Manifest files or run directories')
    sub.add_argument('-o', '--output-dir', default=None, help='Where the report is written')

    sub = subparsers.add_parser('verify', help='Re-hash the artifacts of a run manifest')
    sub.add_argument('manifest', help='Manifest file or run directory')
    return parser


def build_event(args: argparse.Namespace) -> Dict[str, Any]:
    """Translate parsed flags into the handler event."""
    if args.command in STAGE_COMMANDS:
        return {'config': args.config, 'overrides': args.overrides, 'run_dir': args.run_dir}
    if args.command == 'memorize-exp':
        return {
            'config': args.config,
            'overrides': args.overrides,
            'arms': args.arms,
            'output_dir': args.output_dir,
        }
    if args.command == 'report':
        return {'manifests': args.manifests, 'output_dir': args.output_dir}
    return {'manifest': args.manifest}


def handler_for(command: str) -> Callable:
    if command in STAGE_COMMANDS:
        return STAGE_COMMANDS[command]
    return {'memorize-exp': memorize_exp, 'report': report, 'verify': verify}[command]


def print_report(rows: List[Dict[str, Any]]) -> None:
    """Render the report rows as a terminal table."""
    table = Table(title='Membership inference report')
    columns = ['experiment', 'seed', 'defense', 'attack', 'auc', 'tpr_at_1pct_fpr',
               'energy_distance', 'memorization_fraction']
    for column in columns:
        table.add_column(column)
    for row in rows:
        cells = []
        for column in columns:
            value = row.get(column)
            cells.append(f'{value:.4f}' if isinstance(value, float) else str(value))
        table.add_row(*cells)
    console.print(table)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    result = handler_for(args.command)(build_event(args), None)
    body = json.loads(result['body'])

    if args.command == 'report' and result['statusCode'] < 400:
        print_report(body['rows'])
        console.print(f"Report written to {body['paths']['markdown']}")
    else:
        console.print_json(json.dumps(body, default=str))

    if result['statusCode'] >= 400:
        console.print(f"[red]{args.command} failed with status {result['statusCode']}[/red]")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
