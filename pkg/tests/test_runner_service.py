import os

import pytest

from ensemble_service import ensemble_spec
from matrix_io_service import MatrixIOService
from operator_core import ConfigError
from report_service import ReportRow, ReportService
from runner_service import CHECKS, VerificationRunner


@pytest.fixture
def runner(fast_cfg):
    return VerificationRunner(fast_cfg)


def test_normal_ensemble_parallel_to_identity(runner):
    outcome = runner.run('thm-3-1', ensemble_spec('normal', 4, 5, 7))
    assert outcome.exit_code == 0
    assert len(outcome.rows) == 15
    assert {r.verdict for r in outcome.rows} == {'holds', 'agree'}
    assert [r.instance_id for r in outcome.rows] == sorted(r.instance_id for r in outcome.rows)
    assert all(r.wall_time_ms == 0.0 for r in outcome.rows)


def test_nilpotent_ensemble_fails_consistently(runner):
    outcome = runner.run('cor-3-1', ensemble_spec('nilpotent2', 4, 3, 1))
    assert outcome.exit_code == 0
    assert outcome.flagged == []
    verdicts = {r.verdict for r in outcome.rows if not r.check_name.endswith(':consistent')}
    assert verdicts == {'fails'}


def test_thread_count_does_not_change_the_report(fast_cfg):
    spec = ensemble_spec('ginibre', 3, 4, 21)
    serial = VerificationRunner(fast_cfg, threads=1).run('thm-3-1', spec)
    threaded = VerificationRunner(fast_cfg, threads=3).run('thm-3-1', spec)
    reports = ReportService()
    assert reports.render(serial.rows, 'csv') == reports.render(threaded.rows, 'csv')


def test_inequality_checks(runner):
    for check, name in (('refine-ii', 'refinement_ii'), ('identities', 'buzano')):
        outcome = runner.run(check, ensemble_spec('ginibre', 3, 2, 3))
        assert outcome.exit_code == 0, check
        assert name in {r.check_name for r in outcome.rows}


def test_pair_checks_use_relation(runner):
    outcome = runner.run('thm-2-2', ensemble_spec('ginibre', 3, 2, 5), relation='bj-orthogonal')
    assert outcome.exit_code == 0
    holds = [r for r in outcome.rows if r.check_name == 'thm-2-2:bj_orthogonal']
    assert len(holds) == 2
    assert all(r.verdict == 'holds' for r in holds)


def test_rank_one_instances(runner):
    outcome = runner.run('cor-3-4', ensemble_spec('rank_one', 3, 3, 2))
    assert outcome.exit_code == 0


def test_rank_one_check_needs_rank_one_ensemble(runner):
    with pytest.raises(ConfigError):
        runner.run('cor-3-4', ensemble_spec('ginibre', 3, 1, 2))


def test_r_orthogonal_pairs_reach_the_holds_side(runner):
    outcome = runner.run('thm-2-3', ensemble_spec('ginibre', 3, 3, 5), relation='r-orthogonal')
    assert outcome.exit_code == 0
    rows = [r for r in outcome.rows if r.check_name == 'thm-2-3:r_orthogonal']
    assert len(rows) == 3
    assert {r.verdict for r in rows} == {'holds'}


def test_timings(fast_cfg):
    outcome = VerificationRunner(fast_cfg, timings=True).run('daugavet', ensemble_spec('hermitian', 3, 2, 1))
    assert all(r.wall_time_ms >= 0.0 for r in outcome.rows)


def test_flagged_instances_are_dumped(fast_cfg, tmp_path):
    runner = VerificationRunner(fast_cfg, io_service=MatrixIOService(str(tmp_path)))
    runner.handlers['thm-3-1'] = lambda i, T, S, seed: [ReportRow(i, 'thm-3-1:consistent', None, None, 0.0,
                                                                  'disagree')]
    outcome = runner.run('thm-3-1', ensemble_spec('ginibre', 2, 2, 0))
    assert outcome.flagged == [0, 1]
    assert outcome.exit_code == 1
    assert sorted(os.listdir(tmp_path)) == ['thm-3-1_000000_T.json', 'thm-3-1_000001_T.json']


def test_unknown_check(runner):
    with pytest.raises(ValueError):
        runner.run('thm-9-9', ensemble_spec('ginibre', 2, 1, 0))


def test_every_check_has_a_handler(runner):
    assert set(CHECKS) == set(runner.handlers)


def test_flagged_instances_default_to_a_replay_dir(fast_cfg, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner = VerificationRunner(fast_cfg)
    runner.handlers['cor-3-1'] = lambda i, T, S, seed: [ReportRow(i, 'cor-3-1:consistent', None, None, 0.0,
                                                                  'disagree')]
    outcome = runner.run('cor-3-1', ensemble_spec('ginibre', 2, 1, 0))
    assert outcome.flagged == [0]
    assert os.listdir(tmp_path / 'replay') == ['cor-3-1_000000_T.json']
