from utils.lemma_checks import run_batteries

from .base_cli import EXIT_BOUND_VIOLATED, EXIT_OK


class LemmasSection:
    """Randomized inequality batteries."""

    name = "lemmas"

    def __init__(self, cli):
        self.cli = cli
        parser = cli.add_command(self.name, "run the fidelity, norm and truncation batteries")
        parser.add_argument("--trials", type=int, help="fidelity/trace-distance pairs (default 1000)")
        parser.add_argument("--samples", type=int, help="Monte Carlo samples per channel (default 20000)")

    def run(self, config):
        trials = config.get('trials', 1000)
        self.cli.status("🔄", f"Running batteries with {trials} trials")
        results = run_batteries(trials, config.seed, workers=config.workers, samples=config.get('samples', 20000))
        failed = [name for name, battery in results.items() if not battery['passed']]
        for name, battery in results.items():
            icon = "✅" if battery['passed'] else "❌"
            self.cli.status(icon, f"{name}: {battery['violations']} violations, "
                                  f"worst margin {battery['worst_margin']:.3g}")
        seeds = {'batteries': int(config.seed)}
        return results, seeds, EXIT_BOUND_VIOLATED if failed else EXIT_OK
