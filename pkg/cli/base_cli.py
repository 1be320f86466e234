import argparse
import os
import sys

from utils.analysis_config import ENV_PREFIX
from utils.errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_BOUND_VIOLATED = 4

# flag name -> (type, default)
COMMON_PARAMETERS = {
    'seed': (int, None),
    'out': (str, None),
    'workers': (int, 1),
    'tol_align': (float, None),
    'tol_state': (float, None),
    'tol_channel': (float, None),
    'tol_bound': (float, 1e-6),
}

COMMAND_PARAMETERS = {
    'instance': (str, 'bell'),
    'definition': (str, None),
    'd': (int, None),
    'mu': (int, None),
    'eps': (float, None),
    'leak': (float, 0.0),
    'trials': (int, None),
    'samples': (int, None),
    'restarts': (int, None),
}


def _coerce(name, kind, raw, source):
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} from {source} is not a valid {kind.__name__}: {raw!r}", path=(name,))


class ExperimentConfig:
    """Resolved parameters of one run: flags first, then QBC_<NAME> variables, then defaults."""

    STOCHASTIC = ('shredder', 'monster', 'lemmas')

    def __init__(self, command, values):
        self.command = command
        self.values = dict(values)

    def __getattr__(self, name):
        values = self.__dict__.get('values', {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    @classmethod
    def from_namespace(cls, args, environ=None):
        environ = os.environ if environ is None else environ
        values = {}
        parameters = {**COMMON_PARAMETERS, **COMMAND_PARAMETERS}
        for name, (kind, default) in parameters.items():
            flag = getattr(args, name, None)
            env_key = ENV_PREFIX + name.upper()
            if flag is not None:
                values[name] = flag
            elif env_key in environ:
                values[name] = _coerce(name, kind, environ[env_key], env_key)
            else:
                values[name] = default
        for name in ('notary', 'separation'):
            values[name] = bool(getattr(args, name, False))
        config = cls(args.command, values)
        config.check()
        return config

    def check(self):
        v = self.values
        if self.command in self.STOCHASTIC and v['seed'] is None:
            raise ConfigError(f"{self.command} draws random samples and needs --seed", path=('seed',))
        if v['seed'] is not None and not 0 <= v['seed'] < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", path=('seed',))
        if v['workers'] < 1:
            raise ConfigError("workers must be at least 1", path=('workers',))
        if not 0 <= v['leak'] <= 1:
            raise ConfigError("leak must lie in [0, 1]", path=('leak',))
        for name in ('d', 'mu', 'trials', 'samples', 'restarts'):
            if v[name] is not None and v[name] < 1:
                raise ConfigError(f"{name} must be positive", path=(name,))
        if v['d'] is not None and v['d'] < 2:
            raise ConfigError("d must be at least 2", path=('d',))
        if v['eps'] is not None and not 0 < v['eps'] < 2:
            raise ConfigError("eps must lie in (0, 2)", path=('eps',))
        for name in ('tol_align', 'tol_state', 'tol_channel', 'tol_bound'):
            if v[name] is not None and not 0 < v[name] < 1:
                raise ConfigError(f"{name} must lie in (0, 1)", path=(name,))
        if self.command == 'nogo' and v['definition'] is None and v['instance'] not in ('bell', 'anon', 'shredder'):
            raise ConfigError(f"unknown instance {v['instance']!r}", path=('instance',))
        if self.command == 'nogo' and v['instance'] == 'anon' and (v['d'] or 2) > 3:
            raise ConfigError("the anonymous-state instance is limited to d <= 3", path=('d',))

    @property
    def tolerances(self):
        names = {'tol_align': 'ALIGN_TOL', 'tol_state': 'STATE_TOL', 'tol_channel': 'CHANNEL_TOL'}
        return {target: self.values[flag] for flag, target in names.items() if self.values[flag] is not None}

    def get(self, name, default=None):
        value = self.values.get(name)
        return default if value is None else value

    def to_dict(self):
        return {'command': self.command, **self.values}


class BaseCLI:
    """Base command-line front end with the options shared by every subcommand."""

    def __init__(self, prog="qbc"):
        self.parser = argparse.ArgumentParser(
            prog=prog,
            description="Quantum bit commitment simulator and no-go analyzer",
        )
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)

    def add_command(self, name, help_text):
        """Create a subcommand parser carrying the common options."""
        parser = self.subparsers.add_parser(name, help=help_text)
        self.add_common_arguments(parser)
        return parser

    def add_common_arguments(self, parser):
        group = parser.add_argument_group("run")
        group.add_argument("--seed", type=int, help="seed of every random stream (QBC_SEED)")
        group.add_argument("--out", help="report path; printed to stdout when omitted (QBC_OUT)")
        group.add_argument("--workers", type=int, help="threads for independent trials (QBC_WORKERS)")
        tol = parser.add_argument_group("tolerances")
        tol.add_argument("--tol-align", dest="tol_align", type=float, help="alignment stopping tolerance")
        tol.add_argument("--tol-state", dest="tol_state", type=float, help="density validation tolerance")
        tol.add_argument("--tol-channel", dest="tol_channel", type=float, help="Kraus completeness tolerance")
        tol.add_argument("--tol-bound", dest="tol_bound", type=float, help="slack allowed on checked bounds")

    def parse(self, argv=None):
        return self.parser.parse_args(argv)

    @staticmethod
    def status(icon, message):
        print(f"{icon} {message}")

    @staticmethod
    def error(message):
        print(f"❌ {message}", file=sys.stderr)

    def result_line(self, label, value):
        if isinstance(value, float):
            value = f"{value:.10g}"
        self.status("📊", f"{label}: {value}")
