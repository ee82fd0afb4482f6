#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

"""Command line entry point.

Exit codes are stable: 0 finished or all checks passed, 1 solver error,
2 blow-up, 3 configuration or usage error, 4 I/O error, 5 failed check.

"""

import argparse
import logging
import sys

import numpy as np
import yaml

from smcflab import (
    config,
    diagnostics,
    geometry,
    grid,
    integrator,
    oracle,
    snapshot,
    writers,
)

LOG = logging.getLogger("smcflab")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWN_UP = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_CHECK = 5

STATUS_EXIT = {
    integrator.FINISHED: EXIT_OK,
    integrator.ERROR: EXIT_ERROR,
    integrator.BLOWN_UP: EXIT_BLOWN_UP,
}

E1_TOLERANCE = 1e-9
FRAME_TOLERANCE = 1e-10
HOLDER_TOLERANCE = 1e-12
ORACLE_TOLERANCE = 1e-3
DEFAULT_MIN_ORDER = 3.5


class ArgumentParser(argparse.ArgumentParser):
    "Report usage errors with the configuration exit code."

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, "{}: error: {}\n".format(self.prog, message))


def cmd_run(args):
    """Evolve the configured state and write the series and snapshots.

    :param args: parsed command line, with ``config``
    :type args: argparse.Namespace

    """
    cfg = config.parse_config(args.config)
    with writers.open_sink(cfg) as sink:
        state = integrator.run(cfg, sink)
        records = list(sink.records)
    if len(records) >= 2:
        LOG.info("relative volume drift %.3g", diagnostics.volume_drift(records))
    if len(records) >= 3:
        diagnostics.energy_monitor(records)
    if records and cfg.grid.d >= 2:
        plan = diagnostics.parameter_plan(cfg.grid.d, cfg.diagnostics.delta)
        profile = diagnostics.bootstrap_profile(records, plan)
        LOG.info(
            "bootstrap profile %.4g initially, %.4g at most",
            profile[0],
            np.max(profile),
        )
    return STATUS_EXIT[state.status]


def cmd_decay_fit(args):
    "Print the power law fitted to one series column."
    series = writers.read_series(args.series)
    slope, stderr, count = diagnostics.fit_decay_exponent(
        series, args.t_lo, args.t_hi, column=args.column
    )
    print("slope={!r} stderr={!r} n={}".format(slope, stderr, count))
    return EXIT_OK


def cmd_scatter(args):
    "Print the Cauchy table of pulled back snapshots and store the last one."
    snapshots = []
    for path in args.snapshots:
        field, t = snapshot.read_snapshot(path)
        snapshots.append((t, field))
    snapshots.sort(key=lambda pair: pair[0])
    profile = diagnostics.scattering_profile(snapshots)
    for a, t_a in enumerate(profile.times):
        for t_b in profile.times[a + 1 :]:
            print(
                "t_a={!r} t_b={!r} h2={!r}".format(
                    t_a, t_b, profile.distance(t_a, t_b)
                )
            )
    snapshot.write_snapshot(args.output, profile.phi_plus, 0.0)
    LOG.info("wrote scattering state estimate to %s", args.output)
    return EXIT_OK


def _report(name, passed, detail):
    print("{} {} {}".format("PASS" if passed else "FAIL", name, detail))
    return passed


def _frame_defect(bundle):
    nu1, nu2 = bundle.frame.normals
    defect = 0.0
    for a, b, want in ((nu1, nu1, 1.0), (nu2, nu2, 1.0), (nu1, nu2, 0.0)):
        defect = max(defect, float(np.max(np.abs(np.sum(a * b, axis=0) - want))))
    for tangent in bundle.tangents:
        for nu in (nu1, nu2):
            defect = max(defect, float(np.max(np.abs(np.sum(tangent * nu, axis=0)))))
    return defect


def geometry_checks(field):
    """Run the pointwise geometry checks on one state, printing a line each.

    Returns True when every check passes.

    """
    try:
        bundle = geometry.geometry_bundle(field)
    except geometry.GeometryError as err:
        return _report("metric", False, str(err))
    min_det = float(np.min(bundle.metric.sqrt_det))
    results = [_report("metric", True, "min sqrt(det g)={:.6g}".format(min_det))]

    violation = diagnostics.check_pointwise_e1(field, bundle=bundle)
    results.append(
        _report(
            "pointwise-curvature",
            violation <= E1_TOLERANCE,
            "violation={:.3e}".format(violation),
        )
    )

    defect = _frame_defect(bundle)
    results.append(
        _report("frame", defect <= FRAME_TOLERANCE, "defect={:.3e}".format(defect))
    )

    ratio = diagnostics.holder_ratio(field, 4)
    results.append(
        _report("holder", ratio <= 1.0 + HOLDER_TOLERANCE, "ratio={:.6g}".format(ratio))
    )

    if field.spec.n >= oracle.MIN_POINTS:
        brute = oracle.fd_geometry(field)
        scale = 1.0 + float(np.max(np.abs(bundle.curvature.JH)))
        error = float(
            np.max(np.abs(bundle.curvature.JH - brute.skew_mean_curvature))
        )
        results.append(
            _report(
                "oracle-skew_mean_curvature",
                error <= ORACLE_TOLERANCE * scale,
                "error={:.3e}".format(error),
            )
        )
    return all(results)


def cmd_check_geometry(args):
    "Check the configured initial state or a stored snapshot."
    if args.snapshot:
        try:
            field, t = snapshot.read_snapshot(args.snapshot)
        except grid.NonFiniteFieldError as err:
            _report("snapshot-finite", False, "{}: {}".format(args.snapshot, err))
            return EXIT_CHECK
        LOG.info("checking snapshot %s at t=%g", args.snapshot, t)
    else:
        field = config.parse_config(args.config).initial_state()
    return EXIT_OK if geometry_checks(field) else EXIT_CHECK


def default_resolutions(n):
    return sorted({max(oracle.MIN_POINTS, n // 4), max(oracle.MIN_POINTS, n // 2), n})


def cmd_oracle_compare(args):
    "Convergence of every spectral geometry quantity against the oracle."
    cfg = config.parse_config(args.config)
    resolutions = args.resolutions or default_resolutions(cfg.grid.n)

    def make_state(n):
        return cfg.initial_state(grid.GridSpec(cfg.grid.d, n, cfg.grid.length))

    passed = True
    for quantity in oracle.QUANTITIES:
        report = oracle.compare(
            quantity, resolutions, make_state=make_state, min_order=args.min_order
        )
        print(report.format())
        passed = passed and report.passed
    return EXIT_OK if passed else EXIT_CHECK


def _parser():
    parser = ArgumentParser(prog="smcflab")
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        default=False,
        help="report more details about what is happening",
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        default=False,
        help="show tracebacks instead of exit codes",
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    run = commands.add_parser("run", help="evolve a configured state")
    run.add_argument("--config", required=True)
    run.set_defaults(func=cmd_run)

    fit = commands.add_parser("decay-fit", help="fit a power law to a series")
    fit.add_argument("series")
    fit.add_argument("--t-lo", type=float, default=1.0)
    fit.add_argument("--t-hi", type=float, required=True)
    fit.add_argument("--column", default="w2qprime")
    fit.set_defaults(func=cmd_decay_fit)

    scatter = commands.add_parser("scatter", help="estimate the scattering state")
    scatter.add_argument("snapshots", nargs="+")
    scatter.add_argument("--output", default="phi_plus.smcf")
    scatter.set_defaults(func=cmd_scatter)

    check = commands.add_parser("check-geometry", help="check pointwise geometry")
    source = check.add_mutually_exclusive_group(required=True)
    source.add_argument("--config")
    source.add_argument("--snapshot")
    check.set_defaults(func=cmd_check_geometry)

    compare = commands.add_parser(
        "oracle-compare", help="compare spectral geometry with finite differences"
    )
    compare.add_argument("--config", required=True)
    compare.add_argument("--resolutions", type=int, nargs="+", default=None)
    compare.add_argument("--min-order", type=float, default=DEFAULT_MIN_ORDER)
    compare.set_defaults(func=cmd_oracle_compare)
    return parser


def main(args=None):
    parser = _parser()
    args = parser.parse_args(args)

    if args.verbose or args.debug:
        log_level = logging.DEBUG
    else:
        log_level = logging.INFO

    logging.basicConfig(
        level=log_level,
        format="%(name)s: %(message)s",
    )
    logging.debug("starting")

    try:
        return args.func(args)
    except (config.ConfigError, yaml.YAMLError) as err:
        if args.debug:
            raise
        LOG.error("configuration error: %s", err)
        return EXIT_CONFIG
    except (OSError, snapshot.SnapshotFormatError) as err:
        if args.debug:
            raise
        LOG.error("I/O error: %s", err)
        return EXIT_IO
    except ValueError as err:
        if args.debug:
            raise
        LOG.error("%s failed: %s", args.command, err)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
