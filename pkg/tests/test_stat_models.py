import numpy as np
import pandas as pd
from powersurrogate import stat_models
from powersurrogate.special_math import RngStream
from powersurrogate.stat_models import ColumnSpec, DesignSpec, ModelFamily
import pytest
from scipy import special, stats


@pytest.mark.parametrize('column', [
    ColumnSpec.normal(1, 2),
    ColumnSpec.categorical([0, 1, 2]),
    ColumnSpec.product(1, 2),
])
def test_column_spec_dict(column: ColumnSpec):
    assert ColumnSpec.from_dict(column.to_dict()) == column


def test_column_spec_product_format():
    assert ColumnSpec.product(1, 2).to_dict() == {"kind": "product", "of": [1, 2]}


@pytest.mark.parametrize('kwargs', [
    {"kind": "normal", "sigma": -1},
    {"kind": "categorical"},
    {"kind": "product", "factors": (1,)},
    {"kind": "uniform"},
])
def test_column_spec_invalid(kwargs):
    with pytest.raises(stat_models.SpecificationError):
        ColumnSpec(**kwargs)


def test_design_spec_product_must_reference_earlier_columns():
    with pytest.raises(stat_models.SpecificationError, match='earlier columns'):
        DesignSpec((ColumnSpec.normal(), ColumnSpec.product(1, 3), ColumnSpec.normal()))


@pytest.mark.parametrize('name', ['D_O', 'D_A'])
def test_named_designs(name):
    spec = stat_models.get_design_spec(name, 20)
    assert spec.num_predictors == 20
    assert stat_models.get_design_spec(name, 3).columns == spec.columns[:3]
    assert DesignSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(stat_models.SpecificationError):
        stat_models.get_design_spec(name, 21)
    with pytest.raises(stat_models.SpecificationError):
        stat_models.get_design_spec(name, 0)


def test_get_design_spec_unknown():
    with pytest.raises(stat_models.SpecificationError, match='unknown design'):
        stat_models.get_design_spec('D_X', 3)


def test_design_o_first_columns():
    # Binary categorical, standard normal, and their interaction.
    spec = stat_models.D_O
    assert spec.columns[0] == ColumnSpec.categorical([-1, 1])
    assert spec.columns[1] == ColumnSpec.normal(0, 1)
    assert spec.columns[2] == ColumnSpec.product(1, 2)


def test_generate_design():
    spec = stat_models.get_design_spec('D_O', 5)
    design = stat_models.generate_design(spec, 1000, RngStream(0))
    assert design.shape == (1000, 5)
    assert set(np.unique(design[:, 0])) == {-1, 1}
    np.testing.assert_allclose(design[:, 2], design[:, 0] * design[:, 1])
    np.testing.assert_allclose(design[:, 4], design[:, 3] * design[:, 1])
    assert abs(design[:, 3].std() - 2) < 0.2
    np.testing.assert_array_equal(design, stat_models.generate_design(spec, 1000, RngStream(0)))


def test_generate_design_empty():
    spec = stat_models.get_design_spec('D_O', 3)
    assert stat_models.generate_design(spec, 0, RngStream(0)).shape == (0, 3)
    assert stat_models.generate_design(DesignSpec(()), 4, RngStream(0)).shape == (4, 0)


def test_hypothesis():
    hypothesis = stat_models.Hypothesis((3, 1, 3), 'partial_F')
    assert hypothesis.tested_indices == (1, 3)
    hypothesis.validate(3)
    with pytest.raises(stat_models.SpecificationError):
        hypothesis.validate(2)
    with pytest.raises(stat_models.SpecificationError):
        stat_models.Hypothesis((), 'wald')
    with pytest.raises(stat_models.SpecificationError, match='single coefficient'):
        stat_models.Hypothesis((1, 2), 't')
    assert stat_models.Hypothesis.from_dict(hypothesis.to_dict()) == hypothesis


@pytest.mark.parametrize('tag, test, design', [
    ('REG', 'partial_F', 'D_O'),
    ('LOGIT', 'wald', 'D_A'),
    ('RMANOVA', 'rm_anova_F', 'D_O'),
])
def test_model_family_defaults(tag, test, design):
    family = ModelFamily(tag)
    assert family.default_test == test
    assert family.default_design == design
    assert family.hypothesis([1, 3]).test == test
    assert ModelFamily.from_dict(family.to_dict()) == family


def test_model_family_rejects_mismatched_test():
    spec = stat_models.get_design_spec('D_O', 3)
    with pytest.raises(stat_models.SpecificationError, match='does not support'):
        ModelFamily('LOGIT').validate(spec, stat_models.Hypothesis((1,), 't'))
    with pytest.raises(stat_models.SpecificationError):
        ModelFamily('GLM')
    with pytest.raises(stat_models.SpecificationError):
        ModelFamily('RMANOVA', (1, 2))


def test_within_subject_effects():
    spec = stat_models.get_design_spec('D_O', 10)
    hypothesis = stat_models.Hypothesis
    assert stat_models.within_subject_effects(spec, hypothesis((1,), 'rm_anova_F')) == ['A']
    assert stat_models.within_subject_effects(spec, hypothesis((2,), 'rm_anova_F')) == ['B']
    assert stat_models.within_subject_effects(spec, hypothesis((1, 3), 'rm_anova_F')) == \
        ['A', 'AB']
    # Column 5 is the product of columns 4 and 2, depending on factor B only.
    assert stat_models.within_subject_effects(spec, hypothesis((5,), 'rm_anova_F')) == ['B']
    with pytest.raises(stat_models.SpecificationError, match='do not vary'):
        stat_models.within_subject_effects(spec, hypothesis((4, 6), 'rm_anova_F'))


def test_condition_design():
    spec = stat_models.get_design_spec('D_O', 3)
    design = stat_models.generate_design(spec, 4, RngStream(0))
    conditions = stat_models.condition_design(spec, design, (2, 3))
    assert conditions.shape == (4, 6, 3)
    np.testing.assert_allclose(conditions[0, :, 0], [-1, -1, -1, 1, 1, 1])
    np.testing.assert_allclose(conditions[0, :, 1], [-1, 0, 1, -1, 0, 1])
    np.testing.assert_allclose(conditions[..., 2], conditions[..., 0] * conditions[..., 1])


@pytest.mark.parametrize('tag', ['REG', 'LOGIT', 'RMANOVA'])
def test_generate_response_shapes(tag):
    family = ModelFamily(tag)
    spec = stat_models.get_design_spec('D_O', 3)
    design = stat_models.generate_design(spec, 50, RngStream(0))
    response = stat_models.generate_response(family, design, np.ones(3), RngStream(1),
                                             spec=spec)
    if tag == 'RMANOVA':
        assert response.shape == (50, 4)
    else:
        assert response.shape == (50,)
    if tag == 'LOGIT':
        assert set(np.unique(response)) <= {0, 1}


def test_generate_response_regression_mean():
    family = ModelFamily('REG')
    design = np.random.normal(0, 1, (100_000, 2))
    beta = np.asarray([0.5, -1])
    error = ColumnSpec.normal(0, 2)
    response = stat_models.generate_response(family, design, beta, RngStream(3), error)
    residuals = response - design @ beta
    assert abs(residuals.mean()) < 0.03
    assert abs(residuals.std() - 2) < 0.03


def test_generate_response_logistic_rate():
    design = np.zeros((100_000, 1))
    response = stat_models.generate_response(ModelFamily('LOGIT'), design, [1.0], RngStream(3),
                                             spec=None)
    assert abs(response.mean() - 0.5) < 0.01
    design = np.ones((100_000, 1))
    response = stat_models.generate_response(ModelFamily('LOGIT'), design, [1.0], RngStream(3))
    assert abs(response.mean() - special.expit(1)) < 0.01


def test_generate_response_invalid():
    with pytest.raises(ValueError):
        stat_models.generate_response(ModelFamily('REG'), np.ones((3, 2)), np.ones(3),
                                      RngStream(0))
    with pytest.raises(ValueError, match='design spec'):
        stat_models.generate_response(ModelFamily('RMANOVA'), np.ones((3, 2)), np.ones(2),
                                      RngStream(0))
    with pytest.raises(stat_models.SpecificationError):
        stat_models.generate_response(ModelFamily('REG'), np.ones((3, 2)), np.ones(2),
                                      RngStream(0), ColumnSpec.product(1, 2))


def test_fit_ols_matches_normal_equations():
    n, k = 200, 4
    design = np.random.normal(0, 1, (n, k))
    response = design @ np.arange(1, k + 1) + np.random.normal(0, 1, n)
    fit = stat_models.fit_ols(design, response)
    features = np.column_stack([np.ones(n), design])
    expected = np.linalg.solve(features.T @ features, features.T @ response)
    np.testing.assert_allclose(fit.params, expected, atol=1e-8)
    assert fit.intercept == fit.params[0]
    np.testing.assert_allclose(fit.coefficients, expected[1:], atol=1e-8)
    assert fit.df_residual == n - k - 1
    residuals = response - features @ expected
    assert fit.rss == pytest.approx(residuals @ residuals)
    np.testing.assert_allclose(fit.covariance, fit.residual_variance *
                               np.linalg.inv(features.T @ features), rtol=1e-8)


def test_fit_ols_intercept_only():
    response = np.random.normal(3, 1, 20)
    fit = stat_models.fit_ols(np.empty((20, 0)), response)
    assert fit.params == pytest.approx([response.mean()])


def test_fit_ols_singular():
    design = np.random.normal(0, 1, (20, 1))
    with pytest.raises(stat_models.SingularFitError):
        stat_models.fit_ols(np.column_stack([design, 2 * design]), np.random.normal(0, 1, 20))
    with pytest.raises(ValueError, match='more than'):
        stat_models.fit_ols(np.random.normal(0, 1, (3, 2)), np.random.normal(0, 1, 3))


def test_partial_f_test_matches_scipy_regression():
    n = 50
    design = np.random.normal(0, 1, (n, 3))
    response = design[:, 0] * 0.3 + np.random.normal(0, 1, n)
    full = stat_models.fit_ols(design, response)
    reduced = stat_models.fit_ols(design[:, 1:], response)
    pvalue = stat_models.partial_f_test(full, reduced, n)
    statistic = (reduced.rss - full.rss) / (full.rss / (n - 4))
    assert pvalue == pytest.approx(stats.f(1, n - 4).sf(statistic), abs=1e-10)
    # A single removed coefficient gives the same p-value as the t test.
    assert pvalue == pytest.approx(stat_models.t_test(full, 1), abs=1e-10)


def test_partial_f_test_edge_cases():
    design = np.random.normal(0, 1, (20, 2))
    response = np.random.normal(0, 1, 20)
    full = stat_models.fit_ols(design, response)
    assert stat_models.partial_f_test(full, full) == 1.0
    with pytest.raises(ValueError):
        stat_models.partial_f_test(stat_models.fit_ols(design[:, :1], response), full)

    # Exact fit of the full model.
    exact = design @ np.asarray([1.0, 2.0]) + 3
    full = stat_models.fit_ols(design, exact)
    full.rss = 0.0
    reduced = stat_models.fit_ols(design[:, :1], exact)
    assert stat_models.partial_f_test(full, reduced) == 0.0


def test_t_test():
    n = 30
    design = np.random.normal(0, 1, (n, 2))
    response = np.random.normal(0, 1, n)
    fit = stat_models.fit_ols(design, response)
    statistic = fit.params[2] / np.sqrt(fit.covariance[2, 2])
    assert stat_models.t_test(fit, 2) == pytest.approx(2 * stats.t(n - 3).sf(abs(statistic)))


def test_fit_logistic_irls_matches_newton():
    n = 500
    design = np.random.normal(0, 1, (n, 2))
    response = (np.random.uniform(0, 1, n) < special.expit(design @ [1, -0.5] + 0.2)).astype(float)
    fit = stat_models.fit_logistic_irls(design, response)
    assert fit.converged

    # Independent Newton iterations on the log-likelihood.
    features = np.column_stack([np.ones(n), design])
    params = np.zeros(3)
    for _ in range(100):
        proba = special.expit(features @ params)
        gradient = features.T @ (response - proba)
        hessian = features.T @ (features * (proba * (1 - proba))[:, None])
        params = params + np.linalg.solve(hessian, gradient)
    np.testing.assert_allclose(fit.params, params, atol=1e-6)
    np.testing.assert_allclose(fit.covariance, np.linalg.inv(hessian), rtol=1e-5)
    assert fit.intercept == fit.params[0]
    assert fit.coefficients.shape == (2,)


def test_fit_logistic_irls_separation():
    design = np.linspace(-1, 1, 40)[:, None]
    response = (design[:, 0] > 0).astype(float)
    fit = stat_models.fit_logistic_irls(design, response)
    assert not fit.converged


def test_fit_logistic_irls_single_class():
    fit = stat_models.fit_logistic_irls(np.random.normal(0, 1, (10, 2)), np.ones(10))
    assert not fit.converged
    assert fit.num_iterations == 0
    with pytest.raises(ValueError, match='binary'):
        stat_models.fit_logistic_irls(np.random.normal(0, 1, (10, 2)), np.arange(10))


def test_wald_test():
    coefficients = np.asarray([0.1, 0.5, -0.2])
    covariance = np.diag([0.01, 0.04, 0.09])
    statistic = 0.5 ** 2 / 0.04 + 0.2 ** 2 / 0.09
    assert stat_models.wald_test(coefficients, covariance, (1, 2)) == \
        pytest.approx(stats.chi2(2).sf(statistic))
    assert stat_models.wald_test(np.zeros(3), covariance, (1, 2)) == 1.0
    singular = np.ones((3, 3))
    with pytest.raises(stat_models.DegenerateTestError):
        stat_models.wald_test(coefficients, singular, (1, 2))


def test_rmanova_matches_univariate_decomposition():
    # A 2 x 2 within-subjects design; a single-degree-of-freedom effect's F equals the squared
    # paired t statistic of the corresponding contrast.
    n = 12
    responses = np.random.normal(0, 1, (n, 4)) + np.random.normal(0, 1, (n, 1))
    table = stat_models.rmanova_table(responses, (2, 2))
    y = responses.reshape(n, 2, 2)
    contrasts = {
        "A": y[:, 1].mean(axis=1) - y[:, 0].mean(axis=1),
        "B": y[:, :, 1].mean(axis=1) - y[:, :, 0].mean(axis=1),
        "AB": (y[:, 1, 1] - y[:, 1, 0]) - (y[:, 0, 1] - y[:, 0, 0]),
    }
    for effect, contrast in contrasts.items():
        result = stats.ttest_1samp(contrast, 0)
        assert table[effect]["F"] == pytest.approx(result.statistic ** 2)
        assert table[effect]["p"] == pytest.approx(result.pvalue)
        assert table[effect]["df"] == 1
        assert table[effect]["df_error"] == n - 1


def test_rmanova_hand_computed_table():
    # Three subjects under a 2 x 2 layout; sums of squares worked out by hand from the cell,
    # marginal, subject-by-A, and subject-by-B means. Total 75 = subjects 2 + A 48 + B 12 + AB 3
    # + errors 2 + 6 + 2.
    responses = np.array([
        [1, 3, 4, 8],
        [2, 2, 7, 7],
        [3, 4, 4, 9],
    ])
    table = stat_models.rmanova_table(responses, (2, 2))
    expected = {"A": (48, 2, 48), "B": (12, 6, 4), "AB": (3, 2, 3)}
    for effect, (ss, ss_error, statistic) in expected.items():
        row = table[effect]
        assert row["ss"] == pytest.approx(ss)
        assert row["ss_error"] == pytest.approx(ss_error)
        assert row["df"] == 1
        assert row["df_error"] == 2
        assert row["F"] == pytest.approx(statistic)
        assert row["p"] == pytest.approx(stats.f(1, 2).sf(statistic))


@pytest.mark.parametrize('layout', [(2, 2), (2, 3), (3, 2)])
def test_rmanova_matches_statsmodels(layout):
    anova = pytest.importorskip('statsmodels.stats.anova')
    n = 9
    a, b = layout
    responses = np.random.normal(0, 1, (n, a * b)) + np.random.normal(3, 1, (n, 1)) \
        + np.linspace(0, 1, a * b)
    frame = pd.DataFrame({
        "subject": np.repeat(np.arange(n), a * b),
        "A": np.tile(np.repeat(np.arange(a), b), n),
        "B": np.tile(np.arange(b), n * a),
        "y": responses.ravel(),
    })
    expected = anova.AnovaRM(frame, "y", "subject", within=["A", "B"]).fit().anova_table
    table = stat_models.rmanova_table(responses, layout)
    for effect, row in [("A", "A"), ("B", "B"), ("AB", "A:B")]:
        assert table[effect]["F"] == pytest.approx(expected.loc[row, "F Value"])
        assert table[effect]["df"] == expected.loc[row, "Num DF"]
        assert table[effect]["df_error"] == expected.loc[row, "Den DF"]
        assert table[effect]["p"] == pytest.approx(expected.loc[row, "Pr > F"], abs=1e-12)


@pytest.mark.parametrize('layout', [(2, 2), (2, 3), (3, 3)])
def test_rmanova_location_invariance(layout):
    n = 15
    m = layout[0] * layout[1]
    responses = np.random.normal(0, 1, (n, m)) + np.random.normal(0, 1, (n, 1))
    table = stat_models.rmanova_table(responses, layout)
    shifts = [5.0, np.random.normal(0, 3, (n, 1))]
    for shift in shifts:
        shifted = stat_models.rmanova_table(responses + shift, layout)
        for effect in stat_models.EFFECTS:
            assert shifted[effect]["ss"] == pytest.approx(table[effect]["ss"])
            assert shifted[effect]["ss_error"] == pytest.approx(table[effect]["ss_error"])
            assert shifted[effect]["F"] == pytest.approx(table[effect]["F"])


def test_rmanova_degenerate_sums_of_squares():
    responses = np.tile([[1.0, 1.0, 2.0, 2.0]], (5, 1))
    pvalues = stat_models.rmanova_f_test(responses, (2, 2))
    assert pvalues["A"] == 0
    assert pvalues["B"] == 1
    assert pvalues["AB"] == 1
    with pytest.raises(ValueError):
        stat_models.rmanova_table(responses, (2, 3))
    with pytest.raises(ValueError):
        stat_models.rmanova_table(responses[:1], (2, 2))


@pytest.mark.parametrize('tag, test', [
    ('REG', 'partial_F'), ('REG', 't'), ('REG', 'wald'), ('LOGIT', 'wald'),
    ('RMANOVA', 'rm_anova_F'),
])
def test_evaluate_p_value(tag, test):
    family = ModelFamily(tag)
    spec = stat_models.get_design_spec('D_O', 3)
    hypothesis = stat_models.Hypothesis((1,) if test == 't' else (1, 3), test)
    family.validate(spec, hypothesis)
    generator = RngStream(7).generator()
    design = stat_models.generate_design(spec, 400, generator)
    response = stat_models.generate_response(family, design, np.asarray([1.0, 0.5, 0.5]),
                                             generator, spec=spec)
    pvalue = stat_models.evaluate_p_value(family, spec, hypothesis, design, response)
    assert 0 <= pvalue < 0.05


def test_evaluate_p_value_logistic_nonconvergence():
    family = ModelFamily('LOGIT')
    spec = DesignSpec((ColumnSpec.normal(),))
    design = np.linspace(-1, 1, 40)[:, None]
    with pytest.raises(stat_models.NonConvergenceError):
        stat_models.evaluate_p_value(family, spec, family.hypothesis([1]), design,
                                     (design[:, 0] > 0).astype(float))
