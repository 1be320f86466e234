import sys

from utils.cli_components import AnalyzerCLI


def main(argv=None):
    """Main application entry point."""
    cli = AnalyzerCLI()
    return cli.run(argv)


if __name__ == "__main__":
    sys.exit(main())
