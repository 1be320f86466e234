import numpy as np

from utils.analysis_config import analysis_config
from utils.channel_norms import cb_norm_oracle
from utils.instances import anonymous_state_protocol, bell_protocol, shredder_protocol
from utils.nogo import StrategyRegister, concealment, evaluate_cheat, register_channel, synthesize_cheat
from utils.report_io import load_protocol

from .base_cli import EXIT_BOUND_VIOLATED, EXIT_NOT_CONVERGED, EXIT_OK

ORACLE_SLACK = 1e-3


class NogoSection:
    """Concealment bounds, cheat synthesis and cheat evaluation for one protocol."""

    name = "nogo"

    def __init__(self, cli):
        self.cli = cli
        parser = cli.add_command(self.name, "build Alice's cheat and check it against the concealment bound")
        parser.add_argument("--instance", choices=("bell", "anon", "shredder"), help="built-in protocol")
        parser.add_argument("--def", dest="definition", help="protocol definition file (JSON)")
        parser.add_argument("--d", type=int, help="dimension of the anon/shredder instance")
        parser.add_argument("--leak", type=float, help="anon encoding leak in [0, 1]")
        parser.add_argument("--notary", action="store_true", help="shredder with a notary")
        parser.add_argument("--restarts", type=int, help="alignment restarts")
        parser.add_argument("--trials", type=int, help="oracle restarts")

    def build_protocol(self, config):
        if config.definition is not None:
            self.cli.status("📂", f"Loading protocol definition: {config.definition}")
            return load_protocol(config.definition)
        if config.instance == "anon":
            return anonymous_state_protocol(config.get('d', 2), config.leak)
        if config.instance == "shredder":
            return shredder_protocol(config.get('d', 2), notary=config.notary)
        return bell_protocol()

    def oracle(self, protocol, seed, restarts):
        """Stabilized estimate of the distance of Bob's register channels, when small enough."""
        register = StrategyRegister(protocol.tree, protocol.bobs)
        if register.input_dim > analysis_config.ORACLE_MAX_DIM:
            return None
        gamma0 = register_channel(protocol.tree, protocol.a0, register, protocol.rho0)
        gamma1 = register_channel(protocol.tree, protocol.a1, register, protocol.rho0)
        value, _ = cb_norm_oracle(gamma0, gamma1, restarts, seed)
        return value

    def run(self, config):
        seed = config.get('seed', 0)
        protocol = self.build_protocol(config)
        tree = protocol.tree
        tree.check()
        self.cli.status("🔄", f"Analyzing {protocol!r}")

        bounds = concealment(tree, protocol.a0, protocol.a1, protocol.bobs, protocol.rho0, seed=seed,
                             restarts=config.restarts)
        self.cli.result_line("eps (Choi lower bound)", bounds.eps_lower)
        self.cli.result_line("eps (aligned dilations)", bounds.eps_upper)

        plan = synthesize_cheat(tree, protocol.a0, protocol.a1, protocol.bobs, protocol.rho0, seed=seed,
                                alignment=bounds.alignment)
        report = evaluate_cheat(tree, plan, protocol.a0, protocol.a1, protocol.bobs, protocol.rho0,
                                protocol.verifier, bounds=bounds, seed=seed)
        self.cli.result_line("delta_hat", report.delta_hat)

        eps_oracle = self.oracle(protocol, seed, config.get('trials', 16))
        results = {
            'protocol': protocol.name,
            'protocol_params': protocol.params,
            'concealment': bounds.to_dict(),
            'security': report.to_dict(),
            'bound': 2 * np.sqrt(max(report.eps_upper, 0.0)),
            'bound_holds': report.bound_holds(config.tol_bound),
            'cheat_unitarity_error': plan.unitarity_error(),
            'eps_oracle': eps_oracle,
        }
        if eps_oracle is not None:
            results['oracle_bound_holds'] = bool(report.delta_hat <= 2 * np.sqrt(eps_oracle) + ORACLE_SLACK)
            self.cli.result_line("eps (stabilized oracle)", eps_oracle)

        if not results['bound_holds']:
            self.cli.status("❌", "delta_hat exceeds 2 sqrt(eps)")
            code = EXIT_BOUND_VIOLATED
        elif not report.converged:
            self.cli.status("⚠️", "alignment did not reach its stopping tolerance")
            code = EXIT_NOT_CONVERGED
        else:
            self.cli.status("✅", "cheat stays within 2 sqrt(eps)")
            code = EXIT_OK
        return results, {'alignment': int(seed), 'oracle': int(seed)}, code
