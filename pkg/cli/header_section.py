from utils import __version__
from utils.analysis_config import analysis_config


class HeaderSection:
    """Banner on the console and the header block of every report."""

    TITLE = "🔐 Quantum Bit Commitment Analyzer"

    def __init__(self, version=__version__):
        self.version = version

    def show(self, command):
        print(self.TITLE)
        print(f"   v{self.version} - {command}")
        print("-" * 48)

    def report(self, config, results, seeds):
        """Report body: config echo, tolerances, regeneration seeds and results.

        Worker counts and the output path are left out so reports match across runs.
        """
        settings = analysis_config.get_config_summary()
        settings.pop('WORKERS')
        echo = config.to_dict()
        echo.pop('workers', None)
        echo.pop('out', None)
        return {
            'schema': analysis_config.SCHEMA_VERSION,
            'tool': 'qbc',
            'version': self.version,
            'command': config.command,
            'config': echo,
            'analysis_config': settings,
            'seeds': seeds,
            'results': results,
        }
