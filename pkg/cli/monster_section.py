from utils.channels import mu_star
from utils.monster import (monster_build, monster_general_attack, passive_attack, passive_chain, random_attack,
                           separation, soundness)

from .base_cli import EXIT_BOUND_VIOLATED, EXIT_OK

SEPARATION_GAP = 0.5


class MonsterSection:
    """Randomizing-channel commitment: Choi bound, passive and general attacks, soundness."""

    name = "monster"

    def __init__(self, cli):
        self.cli = cli
        parser = cli.add_command(self.name, "analyze the randomizing-channel commitment")
        parser.add_argument("--d", type=int, help="dimension of Bob's state (default 8, or 32 with --separation)")
        parser.add_argument("--mu", type=int, help="number of unitaries in the randomizing channel (default 2, or 64 with --separation)")
        parser.add_argument("--eps", type=float, help="derive mu from a randomizing target eps")
        parser.add_argument("--trials", type=int, help="random attacks, or ascent trials with --separation")
        parser.add_argument("--separation", action="store_true", help="compare the Choi bound with the plain norm")

    def resolve_mu(self, config, d):
        if config.mu is not None:
            return config.mu
        if config.eps is not None:
            mu = mu_star(d, config.eps)
            self.cli.status("🎯", f"mu = {mu} unitaries for eps = {config.eps:g}")
            return mu
        return 64 if config.separation else 2

    def run(self, config):
        d = config.get('d', 32 if config.separation else 8)
        mu = self.resolve_mu(config, d)
        seed = config.seed
        tol = config.tol_bound
        self.cli.status("🔄", f"Monster instance d={d}, mu={mu}")
        inst = monster_build(d, mu, seed)
        chain = passive_chain(inst)
        choi_bound = 2.0 - 2.0 * mu / d ** 2
        self.cli.result_line("cb lower bound", chain['cb_lower'])

        results = {
            'd': d,
            'mu': mu,
            'cb_lower': chain['cb_lower'],
            'choi_bound': choi_bound,
            'isometry_error': inst.isometry_error(),
            'restriction_error': inst.restriction_error(),
            'passive': chain,
            'soundness': soundness(inst),
            'passive_attack': monster_general_attack(inst, passive_attack(inst)),
        }
        failed = []
        if chain['cb_lower'] < choi_bound - 1e-9:
            failed.append('choi_bound')
        if not (chain['chain_holds'] and chain['bound_holds']):
            failed.append('passive_chain')
        if min(results['soundness'].values()) < 1 - 1e-10:
            failed.append('soundness')

        seeds = {'instance': int(seed)}
        if config.separation:
            trials = config.get('trials', 1000)
            self.cli.status("🔄", f"Plain-norm ascent over {trials} starts")
            sep = separation(inst, trials, seed, workers=config.workers)
            results['separation'] = sep
            seeds['separation'] = int(seed)
            self.cli.result_line("op norm estimate", sep['op_norm_estimate'])
            if sep['gap'] < SEPARATION_GAP:
                failed.append('separation')
        else:
            trials = config.get('trials', 20)
            attacks = [monster_general_attack(inst, random_attack(inst, seed + 1 + i), tol=tol) for i in range(trials)]
            results['random_attacks'] = attacks
            seeds['attacks'] = [int(seed) + 1 + i for i in range(trials)]
            if not all(a['holds'] for a in attacks):
                failed.append('random_attacks')

        results['failed'] = failed
        if failed:
            self.cli.status("❌", f"failed checks: {', '.join(failed)}")
            return results, seeds, EXIT_BOUND_VIOLATED
        self.cli.status("✅", "all monster checks passed")
        return results, seeds, EXIT_OK
