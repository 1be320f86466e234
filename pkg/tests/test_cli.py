import json

import pytest

from cli.base_cli import EXIT_BOUND_VIOLATED, EXIT_CONFIG, EXIT_OK
from qbc import main
from utils.analysis_config import analysis_config
from utils.cli_components import AnalyzerCLI
from utils.instances import bell_protocol
from utils.report_io import save_protocol


def read(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_nogo_bell(tmp_path):
    out = tmp_path / "bell.json"
    assert main(["nogo", "--instance", "bell", "--out", str(out)]) == EXIT_OK
    report = read(out)
    assert report['command'] == "nogo"
    assert report['tool'] == "qbc"
    assert 'workers' not in report['config']
    assert 'WORKERS' not in report['analysis_config']
    results = report['results']
    assert results['protocol'] == "bell"
    assert results['bound_holds'] is True
    assert float(results['security']['delta_hat']) <= 1e-8
    assert float(results['concealment']['eps_lower']) <= 1e-8
    assert report['seeds'] == {'alignment': 0, 'oracle': 0}


def test_nogo_from_definition_file(tmp_path):
    definition = tmp_path / "bell_def.json"
    save_protocol(bell_protocol(), str(definition))
    out = tmp_path / "report.json"
    assert main(["nogo", "--def", str(definition), "--out", str(out)]) == EXIT_OK
    assert read(out)['results']['protocol'] == "bell"


def test_malformed_definition_exits_with_config_error(tmp_path, capsys):
    definition = tmp_path / "broken.json"
    definition.write_text(json.dumps({"schema": "1", "tree": [{"label": [], "owner": "carol"}]}))
    assert main(["nogo", "--def", str(definition)]) == EXIT_CONFIG
    assert "tree/0" in capsys.readouterr().err


def test_stochastic_commands_need_a_seed():
    assert main(["shredder", "--d", "2"]) == EXIT_CONFIG
    assert main(["monster", "--d", "4"]) == EXIT_CONFIG
    assert main(["lemmas", "--trials", "5"]) == EXIT_CONFIG


def test_seed_from_environment(capsys):
    cli = AnalyzerCLI(environ={"QBC_SEED": "5", "QBC_TRIALS": "3"})
    assert cli.run(["shredder", "--d", "3"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['config']['seed'] == 5
    assert len(report['results']['success_01']) == 3


@pytest.mark.parametrize('argv', [
    ["nogo", "--leak", "1.5"],
    ["nogo", "--instance", "anon", "--d", "5"],
    ["shredder", "--seed", "1", "--d", "1"],
    ["monster", "--seed", "1", "--eps", "3"],
    ["nogo", "--tol-align", "2"],
])
def test_invalid_configuration(argv):
    assert main(argv) == EXIT_CONFIG


def test_invalid_environment_value():
    assert AnalyzerCLI(environ={"QBC_SEED": "many"}).run(["shredder"]) == EXIT_CONFIG


@pytest.mark.parametrize('d', [2, 4, 8])
def test_shredder(tmp_path, d):
    out = tmp_path / "shredder.json"
    assert main(["shredder", "--seed", "11", "--d", str(d), "--trials", "5", "--out", str(out)]) == EXIT_OK
    results = read(out)['results']
    assert float(results['max_deviation']) <= 1e-9
    assert float(results['marginal_error']) <= 1e-12


def test_monster(tmp_path):
    out = tmp_path / "monster.json"
    code = main(["monster", "--seed", "1", "--d", "4", "--mu", "1", "--trials", "3", "--out", str(out)])
    assert code == EXIT_OK
    results = read(out)['results']
    assert results['failed'] == []
    assert float(results['cb_lower']) >= 1.875 - 1e-9
    assert len(results['random_attacks']) == 3


def test_reports_do_not_depend_on_workers(tmp_path):
    paths = [tmp_path / f"workers{w}.json" for w in (1, 3)]
    codes = [main(["monster", "--seed", "2", "--d", "4", "--mu", "1", "--separation", "--trials", "4",
                   "--workers", str(w), "--out", str(p)]) for w, p in zip((1, 3), paths)]
    # at d = 4 the Choi bound exceeds the plain norm by only 0.375
    assert codes == [EXIT_BOUND_VIOLATED, EXIT_BOUND_VIOLATED]
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert analysis_config.WORKERS == 1


def test_tolerance_flags_are_restored(tmp_path):
    before = analysis_config.ALIGN_TOL
    assert main(["nogo", "--tol-align", "1e-7", "--out", str(tmp_path / "r.json")]) == EXIT_OK
    assert read(tmp_path / "r.json")['analysis_config']['ALIGN_TOL'] == '9.9999999999999995e-08'
    assert analysis_config.ALIGN_TOL == before


@pytest.mark.slow
def test_nogo_anon_within_oracle_bound(tmp_path):
    out = tmp_path / "anon.json"
    main(["nogo", "--instance", "anon", "--leak", "0.1", "--d", "2", "--seed", "7", "--out", str(out)])
    results = read(out)['results']
    assert results['bound_holds'] is True
    if results['eps_oracle'] is not None:
        assert results['oracle_bound_holds'] is True


@pytest.mark.slow
def test_lemmas(tmp_path):
    out = tmp_path / "lemmas.json"
    assert main(["lemmas", "--seed", "0", "--out", str(out)]) == EXIT_OK
    assert all(b['passed'] for b in read(out)['results'].values())


@pytest.mark.slow
def test_monster_separation_at_scale(tmp_path):
    out = tmp_path / "separation.json"
    assert main(["monster", "--seed", "3", "--separation", "--out", str(out)]) == EXIT_OK
    separation = read(out)['results']['separation']
    assert float(separation['cb_lower']) >= 1.875 - 1e-9
    assert float(separation['gap']) >= 0.5
