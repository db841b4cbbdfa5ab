from __future__ import annotations

import json
import math

import numpy as np
import pytest

import calor.harness
from calor import __version__
from calor.driver import FourierIC
from calor.driver import run
from calor.driver import RunConfig
from calor.harness import ConvergenceReport
from calor.harness import ConvergenceRow
from calor.harness import convergence_study
from calor.harness import emit
from calor.harness import invariance_suite
from calor.harness import InvarianceReport
from calor.harness import linearity_test
from calor.harness import render
from calor.harness import SuiteCategory
from calor.harness import TRUNCATION_STUDIES
from calor.harness import truncation_study
from calor.schemes import residual_ftcs

ACCEPTANCE_NS = [32, 64, 128, 256]


@pytest.mark.timeout(300)
@pytest.mark.parametrize('projection', [None, 'quadratic', 'invariant_quadratic'])
def test_convergence_second_order(projection):
    report = convergence_study(RunConfig(N=4, projection=projection), ACCEPTANCE_NS)
    assert not report.failures
    assert report.passed
    assert 1.75 <= report.fitted_slope <= 2.25
    errors = [row.linf_error for row in report.rows]
    assert errors == sorted(errors, reverse=True)


@pytest.mark.timeout(300)
def test_linearity_second_order():
    report = linearity_test(ACCEPTANCE_NS)
    assert report.kind == 'linearity'
    assert not report.failures
    assert report.passed


@pytest.mark.timeout(300)
def test_convergence_ftcs_stationary_grid():
    report = convergence_study(RunConfig(N=4, scheme='ftcs', grid='stationary'), ACCEPTANCE_NS)
    assert not report.failures
    assert 1.9 <= report.fitted_slope <= 2.1


def test_convergence_study_rows():
    report = convergence_study(RunConfig(N=4, t_final=0.1), [16, 8])
    assert [row.N for row in report.rows] == [8, 16]
    assert report.rows[0].pairwise_order is None
    assert report.rows[1].pairwise_order == pytest.approx(
        math.log(report.rows[0].linf_error / report.rows[1].linf_error) / math.log(2),
    )
    assert report.rows[1].steps == run(RunConfig(N=16, t_final=0.1)).steps
    assert report.config['Ns'] == [8, 16]
    assert 'N' not in report.config


def test_convergence_study_bad_ns():
    with pytest.raises(ValueError) as exception:
        convergence_study(RunConfig(N=4), [3, 8])
    assert exception.value.args[0] == 'Every N must be >= 4, got 3'
    with pytest.raises(ValueError):
        convergence_study(RunConfig(N=4), [])


def test_convergence_study_excludes_failures(monkeypatch):
    measure = calor.harness._measure

    def failing(cfg):
        if cfg.N == 8:
            return cfg, 3, None, 'PositivityLost: invariant_ftcs step lost positivity'
        return measure(cfg)

    monkeypatch.setattr(calor.harness, '_measure', failing)
    report = convergence_study(RunConfig(N=4, t_final=0.1), [8, 16, 32])
    assert [row.N for row in report.failures] == [8]
    assert report.rows[1].pairwise_order is None
    assert report.rows[2].pairwise_order is not None
    assert report.fitted_slope == pytest.approx(report.rows[2].pairwise_order)


def test_convergence_study_threads(monkeypatch):
    base = RunConfig(N=4, projection='invariant_quadratic', t_final=0.1)
    serial = convergence_study(base, [8, 16, 32])
    monkeypatch.setenv('CALOR_THREADS', '2')
    assert convergence_study(base, [8, 16, 32]) == serial


@pytest.mark.parametrize('threads', ['0', 'many'])
def test_convergence_study_bad_threads(monkeypatch, threads):
    monkeypatch.setenv('CALOR_THREADS', threads)
    with pytest.raises(ValueError) as exception:
        convergence_study(RunConfig(N=4, t_final=0.1), [8, 16])
    assert exception.value.args[0] == f'CALOR_THREADS must be a positive integer, got `{threads}`'


def test_linearity_of_constants_is_exact():
    report = linearity_test([8, 16], RunConfig(N=8, projection='quadratic', t_final=0.1), FourierIC(1.0), FourierIC(2.5))
    assert all(row.linf_error <= 1e-12 for row in report.rows)


def test_linearity_needs_projection():
    with pytest.raises(ValueError) as exception:
        linearity_test([8, 16], RunConfig(N=8))
    assert exception.value.args[0].startswith('The linearity test needs a projected configuration')


@pytest.mark.parametrize('study', TRUNCATION_STUDIES)
def test_truncation_orders(study):
    report = truncation_study(study)
    assert report.passed
    assert len(report.rows) == 4


@pytest.mark.parametrize('p', [2, 4])
def test_truncation_spatial_operator_order(p):
    report = truncation_study('spatial_operator', p=p)
    assert report.expected_order == p
    assert report.passed


def test_truncation_unknown_study():
    with pytest.raises(ValueError) as exception:
        truncation_study('crank_nicolson_time')
    assert exception.value.args[0].startswith('Unknown truncation study `crank_nicolson_time`')


@pytest.mark.timeout(600)
def test_invariance_suite_passes():
    report = invariance_suite(trials=1000, seed=1)
    failed = [category.name for category in report.categories if not category.passed]
    assert failed == []
    assert len(report.categories) == 9
    assert report.category('ftcs_control').mode == 'above'


def test_invariance_suite_is_deterministic():
    assert invariance_suite(trials=20, seed=3) == invariance_suite(trials=20, seed=3)


def test_invariance_suite_json_is_reproducible():
    first = render(invariance_suite(trials=1, seed=5), 'json')
    second = render(invariance_suite(trials=1, seed=5), 'json')
    assert first == second


def test_ftcs_control_stencil_is_stationary():
    rng = np.random.default_rng(0)
    for _ in range(10):
        z = calor.harness._solved_ftcs_stencil(rng)
        assert z.x_i_np1 == z.x_i
        assert residual_ftcs(z) == pytest.approx(0.0, abs=1e-9)


def test_invariance_suite_bad_trials():
    with pytest.raises(ValueError):
        invariance_suite(trials=0)


def test_invariance_report_unknown_category():
    report = InvarianceReport(trials=1, seed=0, categories=(SuiteCategory('scheme_zero_set', 0.0, 1e-9),))
    with pytest.raises(KeyError):
        report.category('grid_zero_set')


def test_suite_category_modes():
    assert SuiteCategory('a', 1e-12, 1e-9).passed
    assert not SuiteCategory('a', 1e-8, 1e-9).passed
    assert SuiteCategory('a', 0.1, 1e-3, 'above').passed
    assert not SuiteCategory('a', 1e-4, 1e-3, 'above').passed


def _report() -> ConvergenceReport:
    rows = (
        ConvergenceRow(N=8, h=0.75, dtau=0.125, steps=8, linf_error=0.5),
        ConvergenceRow(N=16, h=0.375, dtau=0.03125, steps=32, linf_error=0.125, pairwise_order=2.0),
    )
    return ConvergenceReport(rows=rows, fitted_slope=2.0, config=dict(scheme='invariant_ftcs'))


def test_render_csv():
    expected = 'N,h,dtau,steps,linf_error,pairwise_order\n' \
               '8,0.75,0.125,8,0.5,\n' \
               '16,0.375,0.03125,32,0.125,2\n'
    assert render(_report(), 'csv') == expected


def test_render_csv_empty_report():
    report = ConvergenceReport(rows=(), fitted_slope=None)
    assert render(report, 'csv') == 'N,h,dtau,steps,linf_error,pairwise_order\n'
    assert not report.passed


def test_render_csv_seventeen_digits():
    row = ConvergenceRow(N=8, h=0.1, dtau=1 / 3, steps=3, linf_error=math.pi)
    text = render(ConvergenceReport(rows=(row,), fitted_slope=None), 'csv')
    assert text.splitlines()[1] == '8,0.10000000000000001,0.33333333333333331,3,3.1415926535897931,'


def test_render_csv_quotes_separators():
    report = InvarianceReport(trials=1, seed=0, categories=(SuiteCategory('zero_set, relative', 0.5, 1.0),))
    expected = 'category,max_violation,tolerance,mode,passed\n' \
               '"zero_set, relative",0.5,1,below,true\n'
    assert render(report, 'csv') == expected


def test_render_unknown_format():
    with pytest.raises(ValueError) as exception:
        render(_report(), 'xml')
    assert exception.value.args[0] == "Unknown report format `xml`, expected one of ['csv', 'json']"


def test_emit_json(tmpdir):
    path = emit(_report(), 'json', f'{tmpdir}/report.json')
    text = path.read_text()
    assert text.endswith('}\n')
    assert not text.endswith('\n\n')
    document = json.loads(text)
    assert document['kind'] == 'convergence'
    assert document['version'] == __version__
    assert document['fitted_slope'] == 2.0
    assert document['passed'] is True
    assert document['rows'][1]['pairwise_order'] == 2.0
    assert document['config'] == dict(scheme='invariant_ftcs')
    assert 'created' not in document


def test_emit_csv_replaces_file(tmpdir):
    path = tmpdir / 'report.csv'
    path.write('stale')
    emit(_report(), 'csv', str(path))
    assert path.read().startswith('N,h,dtau,steps,linf_error,pairwise_order\n')
    assert [p.basename for p in tmpdir.listdir()] == ['report.csv']


def test_emit_json_invariance_report(tmpdir):
    report = InvarianceReport(trials=1, seed=0, categories=(SuiteCategory('canonical_form', math.inf, 1e-9),))
    document = json.loads(emit(report, 'json', f'{tmpdir}/suite.json').read_text())
    assert document['categories'][0]['max_violation'] is None
    assert document['passed'] is False


def test_emit_unwritable_path(tmpdir):
    path = f'{tmpdir}/missing/report.csv'
    with pytest.raises(OSError) as exception:
        emit(_report(), 'csv', path)
    assert exception.value.args[0].startswith(f'Could not write csv report to {path}')


def test_fit_uses_fine_rows():
    rows = [(8, 1.0), (16, 0.5), (32, 0.0625), (64, 0.015625)]
    measurements = [(RunConfig(N=N), 1, error, None) for N, error in rows]
    report = calor.harness._assemble(measurements, {}, 'convergence')
    assert report.fitted_slope == pytest.approx(2.0)
    np.testing.assert_allclose([row.pairwise_order for row in report.rows[1:]], [1.0, 3.0, 2.0])
