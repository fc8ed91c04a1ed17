import os
import pandas as pd
from powersurrogate.features import read_points
from powersurrogate.scripts import sample
from powersurrogate.util import load_json


def test_sample(workspace):
    tmp, config = workspace
    sample.__main__(['--config', config])
    points = read_points(os.path.join(tmp, 'points.csv'))
    assert len(points) == 60
    assert all(point.num_predictors == 3 and 25 <= point.N <= 200 for point in points)
    manifest = load_json(os.path.join(tmp, 'points.json'))
    assert manifest["seed"] == 17
    assert manifest["sampler"]["num_points"] == 60


def test_sample_is_deterministic(workspace):
    tmp, config = workspace
    contents = []
    for name in ['a.csv', 'b.csv']:
        path = os.path.join(tmp, name)
        sample.__main__(['--config', config, '--output', path])
        with open(path, 'rb') as fp:
            contents.append(fp.read())
    assert contents[0] == contents[1]


def test_sample_num_points_override(workspace):
    tmp, config = workspace
    output = os.path.join(tmp, 'few.csv')
    sample.__main__(['--config', config, '--output', output, '--num_points', '7'])
    assert len(pd.read_csv(output)) == 7

    output = os.path.join(tmp, 'none.csv')
    sample.__main__(['--config', config, '--output', output, '--num_points', '0'])
    frame = pd.read_csv(output)
    assert frame.empty
    assert list(frame.columns) == ['beta_1', 'beta_2', 'beta_3', 'N']
