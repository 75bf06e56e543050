import pytest

from operator_core import ToleranceConfig
from verdicts import (
    Agreement, Condition, EquivalenceBattery, InequalityReport, Verdict, agreement, classify,
    equality_margin,
)

CFG = ToleranceConfig()


@pytest.mark.parametrize('margin, scale, expected', [
    (0.0, 1.0, Verdict.HOLDS),
    (1.0, 1.0, Verdict.HOLDS),
    (-5e-9, 1.0, Verdict.HOLDS),
    (-1e-7, 1.0, Verdict.MARGINAL),
    (-1e-7, 100.0, Verdict.HOLDS),
    (-1e-3, 1.0, Verdict.FAILS),
    (float('nan'), 1.0, Verdict.MARGINAL),
])
def test_classify(margin, scale, expected):
    assert classify(margin, CFG, scale=scale) is expected


def test_agreement():
    assert agreement([Verdict.HOLDS, Verdict.HOLDS]) is Agreement.AGREE
    assert agreement([Verdict.FAILS, Verdict.FAILS]) is Agreement.AGREE
    assert agreement([Verdict.HOLDS, Verdict.FAILS]) is Agreement.DISAGREE
    assert agreement([Verdict.HOLDS, Verdict.MARGINAL]) is Agreement.AGREE
    assert agreement([Verdict.MARGINAL]) is Agreement.MARGINAL


def test_inequality_report_compare():
    ok = InequalityReport.compare('ok', 1.0, 2.0, CFG)
    assert ok.slack == 1.0
    assert ok.verdict is Verdict.HOLDS
    bad = InequalityReport.compare('bad', 2.0, 1.0, CFG, optimizer_trace={'x': 1})
    assert bad.verdict is Verdict.FAILS
    assert bad.optimizer_trace == {'x': 1}


def test_battery_assembly():
    battery = EquivalenceBattery.assemble('demo', [
        Condition('a', Verdict.HOLDS, 0.0),
        Condition('b', Verdict.FAILS, -1.0),
    ])
    assert battery.consistent is Agreement.DISAGREE
    assert battery.verdict_of('b') is Verdict.FAILS
    assert battery.verdicts() == [('a', Verdict.HOLDS), ('b', Verdict.FAILS)]
    assert not battery.all_hold()
    with pytest.raises(KeyError):
        battery.verdict_of('missing')


def test_equality_margin():
    assert equality_margin(1.0, 1.5) == -0.5
    assert equality_margin(2.0, 2.0) == 0.0


def test_strictly_less():
    assert InequalityReport.strictly_less('up', 0.5, 0.75, CFG).verdict is Verdict.HOLDS
    assert InequalityReport.strictly_less('flat', 0.5, 0.5, CFG).verdict is Verdict.FAILS
    assert InequalityReport.strictly_less('down', 0.6, 0.5, CFG).verdict is Verdict.FAILS
    tiny = InequalityReport.strictly_less('tiny', 1.0, 1.0 + 1e-12, CFG)
    assert tiny.verdict is Verdict.MARGINAL
    assert tiny.slack > 0
