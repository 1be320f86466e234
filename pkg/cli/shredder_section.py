from utils.channels import random_channel
from utils.instances import ShredderInstance, shredder_eval
from utils.numerics import rng_from

from .base_cli import EXIT_BOUND_VIOLATED, EXIT_OK

SUCCESS_TOL = 1e-9
MARGINAL_TOL = 1e-12


class ShredderSection:
    """Random post-commitment channels against the two-basis shredder."""

    name = "shredder"

    def __init__(self, cli):
        self.cli = cli
        parser = cli.add_command(self.name, "check that every cheat channel succeeds with probability 1/d")
        parser.add_argument("--d", type=int, help="local dimension (default 2)")
        parser.add_argument("--trials", type=int, help="number of random cheat channels (default 20)")

    def cheat_channels(self, d, trials, seed):
        channels = []
        for i in range(trials):
            rng = rng_from(seed, i)
            channels.append(random_channel(d, d, int(rng.integers(1, d + 1)), rng))
        return channels

    def run(self, config):
        d = config.get('d', 2)
        trials = config.get('trials', 20)
        self.cli.status("🔄", f"Shredder d={d}: {trials} random cheat channels")
        inst = ShredderInstance(d)
        results = shredder_eval(inst, self.cheat_channels(d, trials, config.seed))
        self.cli.result_line("max |P - 1/d|", results['max_deviation'])
        self.cli.result_line("Bob marginal error", results['marginal_error'])

        if results['max_deviation'] > SUCCESS_TOL or results['marginal_error'] > MARGINAL_TOL:
            self.cli.status("❌", "success probability depends on the cheat channel")
            return results, {'channels': int(config.seed)}, EXIT_BOUND_VIOLATED
        self.cli.status("✅", f"every cheat succeeds with probability 1/{d}")
        return results, {'channels': int(config.seed)}, EXIT_OK
