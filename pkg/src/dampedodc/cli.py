"""Command-line entry point.

Examples
--------
Sweep the built-in 4-state system from no damping to 0.6::

    dampedodc --builtin paper4x4 --scenario sweep --alpha-max 0.6 \\
        --alpha-step 0.002 --out results/sweep

Run a YAML configuration, overriding its seed::

    dampedodc --config run.yaml --seed 3
"""

import argparse
import logging
import sys

from . import __version__
from .exceptions import ConfigError
from .experiments import (EXIT_CONFIG, SCENARIOS, config_from_mapping,
                          load_config, run)


def build_parser():
    p = argparse.ArgumentParser(
        prog='dampedodc',
        description="Structured LQR experiments with a damping parameter.")
    p.add_argument('--config', help="YAML or JSON run configuration")
    p.add_argument('--scenario', choices=SCENARIOS)
    p.add_argument('--seed', type=int, help="RNG seed (unsigned 64-bit)")
    p.add_argument('--out', help="output directory")
    p.add_argument('--builtin', help="built-in instance, e.g. paper4x4")
    p.add_argument('--alpha-max', type=float, dest='alpha_max')
    p.add_argument('--alpha-step', type=float, dest='alpha_step')
    p.add_argument('--samples', type=int, help="multi-start sample count")
    p.add_argument('--run-id', dest='run_id')
    p.add_argument('-v', '--verbose', action='store_true')
    p.add_argument('--version', action='version',
                   version=f'%(prog)s {__version__}')
    return p


def _merge(args):
    data = {}
    if args.config:
        data = load_config(args.config)
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
    if args.builtin:
        data['instance'] = {'builtin': args.builtin}
    for key in ('scenario', 'out', 'run_id'):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    for key in ('alpha_max', 'alpha_step', 'samples'):
        if getattr(args, key) is not None:
            data.setdefault('schedule' if key != 'samples' else 'multistart',
                            {})
            data['schedule' if key != 'samples' else 'multistart'][key] = \
                getattr(args, key)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        data['seed'] = args.seed
    return config_from_mapping(data)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        cfg = _merge(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg)
    if cfg.scenario == 'theory' and 'checks' in result.summary:
        for c in result.summary['checks']:
            flag = 'PASS' if c['passed'] else 'FAIL'
            print(f"{flag} {c['check']}: value={c['value']} "
                  f"bound={c['bound']} slack={c['slack']}")
    if result.exit_code:
        print(f"run failed (exit {result.exit_code}): {result.message}",
              file=sys.stderr)
    for path in result.files:
        print(path)
    return result.exit_code


if __name__ == '__main__':
    sys.exit(main())
