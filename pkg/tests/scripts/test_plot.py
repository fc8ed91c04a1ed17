import os
import pandas as pd
from powersurrogate.scripts import baseline, plot, train
from powersurrogate.util import dump_json
import pytest


def test_flatten_report():
    report = {
        "transfer": {"metrics": {"f1": 0.5},
                     "identifiers": {"method": "pnn", "train_fraction": 0.1},
                     "call_count": 10},
        "control": {"metrics": {"f1": 0.4}, "identifiers": {"method": "pnn", "train_fraction": 0.1},
                    "call_count": 10},
    }
    rows = plot.flatten_report(report)
    assert [row["label"] for row in rows] == ["pnn/control", "pnn/transfer"]
    assert rows[1]["f1"] == 0.5


@pytest.mark.parametrize('kind', ['manifold', 'cluster'])
def test_plot_dataset(simulated, kind):
    tmp, config = simulated
    output = os.path.join(tmp, 'figures', f'{kind}.svg')
    plot.__main__([kind, os.path.join(tmp, 'dataset.csv'), '--config', config, '--output', output])
    assert os.path.exists(output)
    series = pd.read_csv(os.path.join(tmp, 'figures', f'{kind}.csv'))
    assert len(series) == 60


def test_plot_cluster_assignments(simulated):
    tmp, config = simulated
    baseline.__main__(['cluster', '--config', config])
    plot.__main__(['cluster', os.path.join(tmp, 'clusters.csv'), '--config', config])
    series = pd.read_csv(os.path.join(tmp, 'cluster.csv'))
    assert len(series) == 30
    assert set(series.cluster) <= {0, 1}


@pytest.mark.parametrize('kind', ['trend', 'cost'])
def test_plot_reports(simulated, kind):
    tmp, config = simulated
    reports = []
    for fraction in ['0.2', '0.5']:
        path = os.path.join(tmp, fraction, 'report.json')
        train.__main__(['--config', config, '--fraction', fraction, '--report', path,
                        '--checkpoint', os.path.join(tmp, fraction, 'checkpoint.json')])
        reports.append(path)
        path = os.path.join(tmp, fraction, 'rand.json')
        baseline.__main__(['rand', '--config', config, '--fraction', fraction, '--report', path])
        reports.append(path)

    contents = []
    for name in ['a', 'b']:
        output = os.path.join(tmp, name, f'{kind}.svg')
        plot.__main__([kind, *reports, '--config', config, '--output', output])
        with open(output, 'rb') as fp:
            contents.append(fp.read())
    assert contents[0] == contents[1]
    series = pd.read_csv(os.path.join(tmp, 'a', f'{kind}.csv'))
    assert len(series) == 4
    assert set(series.label) == {"pnn", "rand"}


def test_plot_invalid_arguments(simulated):
    tmp, config = simulated
    dataset = os.path.join(tmp, 'dataset.csv')
    with pytest.raises(SystemExit):
        plot.__main__(['manifold', dataset, dataset, '--config', config])
    report = os.path.join(tmp, 'report.json')
    dump_json({"metrics": {"f1": 1}, "identifiers": {"method": "pnn"}}, report)
    with pytest.raises(SystemExit):
        plot.__main__(['trend', report, '--config', config, '--metric', 'auc'])
    with pytest.raises(SystemExit):
        plot.__main__(['histogram', dataset, '--config', config])
