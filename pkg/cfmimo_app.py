# cfmimo_app.py
import argparse
import logging
import os
import sys
from typing import Callable, List, Optional

from core.errors import CFMimoError
from core.experiment import ExperimentRunner
from core.figures import FIGURES, FigureReproducer
from core.report_writer import (format_report, format_validation, write_report, write_users_csv,
                                write_validation)
from core.scenario import SystemConfig, load_scenario

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_TOOLKIT_ERROR = 2


class CFMimoApp:
    """Command-line front end: simulate, reproduce and validate."""

    def __init__(self, argv: Optional[List[str]] = None):
        self.args = self._build_parser().parse_args(argv)
        if self.args.quiet:
            logging.getLogger().setLevel(logging.WARNING)

    @staticmethod
    def _build_parser() -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog="cfmimo",
                                         description="Cell-free massive MIMO SINR distributions and simulation")
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--seed", type=int, help="override the scenario seed")
        common.add_argument("--realizations", type=int, help="override the number of small-scale realizations")
        common.add_argument("--workers", type=int, help="override the number of worker threads")
        common.add_argument("--out", help="output path (JSON report, or directory for reproduce)")
        common.add_argument("--quiet", action="store_true", help="hide progress bars and info messages")

        commands = parser.add_subparsers(dest="command", required=True)
        simulate = commands.add_parser("simulate", parents=[common], help="simulate a scenario and fit the models")
        simulate.add_argument("scenario", help="JSON scenario file")
        reproduce = commands.add_parser("reproduce", parents=[common], help="write the CSV curves of a figure")
        reproduce.add_argument("figure", help=f"one of {', '.join(FIGURES)}, or 'all'")
        reproduce.add_argument("out_dir", nargs="?", default="figures", help="directory for the CSV files")
        reproduce.add_argument("--scenario", help="JSON scenario file with the base configuration")
        validate = commands.add_parser("validate", parents=[common], help="evaluate the agreement criteria")
        validate.add_argument("scenario", help="JSON scenario file")
        return parser

    def _config(self, path: Optional[str]) -> SystemConfig:
        config = load_scenario(path) if path else SystemConfig()
        return config.with_overrides(seed=self.args.seed, realizations=self.args.realizations,
                                     workers=self.args.workers)

    def _execute_operation(self, operation_name: str, operation_func: Callable[[], int]) -> int:
        logging.info(f"Started {operation_name}...")
        try:
            code = operation_func()
            logging.info(f"{operation_name.capitalize()} completed.")
            return code
        except CFMimoError as e:
            logging.error(f"Error during {operation_name}: {e}")
            return EXIT_TOOLKIT_ERROR
        except Exception as e:
            logging.error(f"Unexpected error during {operation_name}: {e}")
            return EXIT_UNEXPECTED

    def simulate(self) -> int:
        config = self._config(self.args.scenario)
        report = ExperimentRunner(config, show_progress=not self.args.quiet).run_scenario()
        print(format_report(report))
        if self.args.out:
            write_report(report, self.args.out)
            stem, _ = os.path.splitext(self.args.out)
            write_users_csv(report, f"{stem}_users.csv")
        return EXIT_OK

    def reproduce(self) -> int:
        base = self._config(self.args.scenario)
        out_dir = self.args.out or self.args.out_dir
        reproducer = FigureReproducer(base, show_progress=not self.args.quiet)
        figure_ids = reproducer.figure_ids() if self.args.figure == "all" else [self.args.figure]
        for figure_id in figure_ids:
            for path in reproducer.reproduce(figure_id, out_dir):
                print(path)
        return EXIT_OK

    def validate(self) -> int:
        config = self._config(self.args.scenario)
        summary = ExperimentRunner(config, show_progress=not self.args.quiet).validate()
        print(format_validation(summary))
        if self.args.out:
            write_validation(summary, self.args.out)
        return EXIT_OK

    def run(self) -> int:
        operations = {
            "simulate": ("scenario simulation", self.simulate),
            "reproduce": ("figure reproduction", self.reproduce),
            "validate": ("scenario validation", self.validate),
        }
        name, func = operations[self.args.command]
        return self._execute_operation(name, func)


def main(argv: Optional[List[str]] = None) -> int:
    return CFMimoApp(argv).run()


if __name__ == "__main__":
    sys.exit(main())
