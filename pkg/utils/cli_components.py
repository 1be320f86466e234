import os
import sys
from contextlib import redirect_stdout

from .analysis_config import analysis_config
from .errors import ConfigError, QBCError
from .report_io import dumps_report, write_report

# Import modular CLI components
from cli.base_cli import EXIT_CONFIG, BaseCLI, ExperimentConfig
from cli.header_section import HeaderSection
from cli.lemmas_section import LemmasSection
from cli.monster_section import MonsterSection
from cli.nogo_section import NogoSection
from cli.shredder_section import ShredderSection


class AnalyzerCLI(BaseCLI):
    def __init__(self, environ=None):
        super().__init__()
        self.environ = os.environ if environ is None else environ
        self.setup_cli()

    def setup_cli(self):
        """Register every subcommand section."""
        self.header_section = HeaderSection()
        self.sections = {}
        for section_class in (NogoSection, ShredderSection, MonsterSection, LemmasSection):
            section = section_class(self)
            self.sections[section.name] = section

    def run(self, argv=None):
        """Parse, run one subcommand, emit its report; returns the exit code."""
        args = self.parse(argv)
        try:
            config = ExperimentConfig.from_namespace(args, self.environ)
        except ConfigError as e:
            self.error(f"Invalid configuration: {e}")
            return EXIT_CONFIG

        previous_workers = analysis_config.WORKERS
        # console chatter goes to stderr so stdout carries only the report
        try:
            with redirect_stdout(sys.stderr), analysis_config.override(**config.tolerances):
                self.header_section.show(config.command)
                if config.workers != analysis_config.WORKERS:
                    analysis_config.set_workers(config.workers)
                results, seeds, code = self.sections[config.command].run(config)
        except QBCError as e:
            self.error(f"{type(e).__name__}: {e}")
            return EXIT_CONFIG
        finally:
            analysis_config.WORKERS = previous_workers

        report = self.header_section.report(config, results, seeds)
        if config.out:
            write_report(config.out, report)
            self.status("💾", f"Report saved: {config.out}")
        else:
            sys.stdout.write(dumps_report(report))
        return code
