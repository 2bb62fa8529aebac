import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from ordquant.data import CsvSchema, OrdinalDataset, ingest_csv, write_csv
from ordquant.errors import ConfigError, DataError, SchemaError
from ordquant.model import (
    ChainState,
    ModelSpec,
    Priors,
    category_probability,
    initialize_state,
    interior_cutpoints,
    validate_state,
)
from ordquant.simulate import ScenarioConfig, generate_sim1
from ordquant.streams import substream


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestIngest:
    def test_single_subject_file(self, tmp_path):
        f = tmp_path / "toy.csv"
        write_lines(f, ["subject,y,x1", "a,1,0.5", "a,2,-0.5", "a,1,0.25"])
        ds = ingest_csv(f)
        assert ds.num_subjects == 1
        assert ds.num_observations == 3
        assert ds.num_categories == 2
        assert ds.num_covariates == 1
        assert list(ds.observations_per_subject()) == [3]

    def test_out_of_range_category_names_row(self, tmp_path):
        f = tmp_path / "bad.csv"
        write_lines(f, ["subject,y,x1", "a,1,0.5", "a,0,-0.5", "a,2,0.1"])
        with pytest.raises(DataError, match=r"bad\.csv:3"):
            ingest_csv(f, CsvSchema(num_categories=4))

    def test_missing_column(self, tmp_path):
        f = tmp_path / "cols.csv"
        write_lines(f, ["subject,resp,x1", "a,1,0.5"])
        with pytest.raises(SchemaError, match="y"):
            ingest_csv(f)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.csv"
        f.write_text("", encoding="utf-8")
        with pytest.raises(DataError):
            ingest_csv(f)

    def test_header_only(self, tmp_path):
        f = tmp_path / "header.csv"
        write_lines(f, ["subject,y,x1"])
        with pytest.raises(DataError, match="no data rows"):
            ingest_csv(f)

    def test_non_integer_category(self, tmp_path):
        f = tmp_path / "frac.csv"
        write_lines(f, ["subject,y,x1", "a,1,0.5", "a,2.5,0.1"])
        with pytest.raises(DataError, match=r"frac\.csv:3"):
            ingest_csv(f)

    def test_missing_value(self, tmp_path):
        f = tmp_path / "gap.csv"
        write_lines(f, ["subject,y,x1", "a,1,", "a,2,0.1"])
        with pytest.raises(DataError, match=r"gap\.csv:2"):
            ingest_csv(f)

    def test_relabeling_is_order_preserving(self, tmp_path):
        f = tmp_path / "labels.csv"
        write_lines(f, ["subject,y,x1", "a,9,0.5", "a,2,0.1", "b,5,0.2", "b,2,-0.1"])
        ds = ingest_csv(f)
        assert ds.num_categories == 3
        assert ds.category_labels == [2, 5, 9]
        assert list(ds.y) == [3, 1, 2, 1]

    def test_empty_declared_category_warns(self, tmp_path):
        f = tmp_path / "sparse.csv"
        write_lines(f, ["subject,y,x1", "a,1,0.5", "a,2,0.1", "b,4,0.2"])
        with pytest.warns(UserWarning, match=r"\[3\]"):
            ds = ingest_csv(f, CsvSchema(num_categories=4))
        assert ds.num_categories == 4

    def test_subjects_grouped_preserving_order(self, tmp_path):
        f = tmp_path / "interleave.csv"
        write_lines(f, ["subject,y,x1", "b,1,1.0", "a,2,2.0", "b,2,3.0", "a,1,4.0"])
        ds = ingest_csv(f)
        assert ds.subject_ids == ["b", "a"]
        assert list(ds.subject_index) == [0, 0, 1, 1]
        assert list(ds.x[:, 0]) == [1.0, 3.0, 2.0, 4.0]

    def test_roundtrip_sim1_format(self, tmp_path):
        cfg = ScenarioConfig(scenario="sim1", subjects=40, obs_per_subject=5)
        ds = generate_sim1(cfg, substream(99, 2, 0))
        f = tmp_path / "sim.csv"
        write_csv(ds, f)
        again = ingest_csv(f, CsvSchema(num_categories=5))
        assert again == ds

    def test_statistics_match_brute_force(self, tmp_path):
        cfg = ScenarioConfig(scenario="sim1", subjects=7, obs_per_subject=3)
        ds = generate_sim1(cfg, substream(5, 2, 0))
        f = tmp_path / "counts.csv"
        write_csv(ds, f)
        rows = f.read_text().strip().splitlines()[1:]
        cells = [r.split(",") for r in rows]
        assert ds.num_observations == len(cells)
        assert ds.num_subjects == len({c[0] for c in cells})
        assert ds.num_categories == 5
        assert ds.num_covariates == len(rows[0].split(",")) - 3  # subject, y, time
        subj_counts = {}
        for c in cells:
            subj_counts[c[0]] = subj_counts.get(c[0], 0) + 1
        assert list(ds.observations_per_subject()) == [subj_counts[s] for s in ds.subject_ids]


class TestPriors:
    def test_defaults_valid(self):
        p = Priors()
        assert p.delta_min < p.delta_max

    @pytest.mark.parametrize("kwargs", [
        {"a1": 0.0}, {"a2": -1.0}, {"b1": 0.0}, {"b2": 0.0},
        {"delta_min": 2.0, "delta_max": -2.0}, {"delta_min": 1.0, "delta_max": 1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            Priors(**kwargs)


def toy_dataset():
    x = np.array([[0.5], [-0.5], [1.0], [-1.0]])
    y = np.array([2, 1, 2, 1])
    return OrdinalDataset(["u", "w"], np.array([0, 0, 1, 1]), y, x, np.arange(4), 2)


class TestInitializeState:
    def test_equally_spaced_interior_cutpoints(self):
        np.testing.assert_allclose(interior_cutpoints(5, -3.0, 3.0), [-1.8, -0.6, 0.6, 1.8], atol=1e-12)

    def test_bad_support_is_config_error(self):
        with pytest.raises(ConfigError):
            interior_cutpoints(5, 1.0, 1.0 + 1e-300)

    def test_liabilities_respect_thresholds(self):
        cfg = ScenarioConfig(scenario="sim1", subjects=10, obs_per_subject=4)
        ds = generate_sim1(cfg, substream(1, 2, 0))
        spec = ModelSpec(theta=0.3, dataset=ds, priors=Priors(delta_min=-3, delta_max=3))
        state = initialize_state(spec, substream(1, 0, 0))
        validate_state(state, spec)
        assert np.all(state.cutpoints[ds.y - 1] < state.latent_l)
        assert np.all(state.latent_l <= state.cutpoints[ds.y])

    def test_same_seed_same_state(self):
        spec = ModelSpec(theta=0.5, dataset=toy_dataset())
        a = initialize_state(spec, substream(11, 0, 0))
        b = initialize_state(spec, substream(11, 0, 0))
        np.testing.assert_array_equal(a.latent_l, b.latent_l)
        np.testing.assert_array_equal(a.latent_v, b.latent_v)
        np.testing.assert_array_equal(a.cutpoints, b.cutpoints)

    def test_overdispersed_start_moves_beta(self):
        spec = ModelSpec(theta=0.5, dataset=toy_dataset())
        a = initialize_state(spec, substream(11, 0, 0), overdispersed=True)
        assert np.any(a.beta != 0.0)
        validate_state(a, spec)

    def test_neutral_start_values(self):
        spec = ModelSpec(theta=0.5, dataset=toy_dataset())
        st = initialize_state(spec, substream(3, 0, 0))
        assert np.all(st.beta == 0.0)
        assert np.all(st.alpha == 0.0)
        assert st.lambda_sq == 1.0 and st.phi == 1.0
        assert np.all(st.s == 1.0)


class TestCategoryProbability:
    def test_centered_binary_split(self):
        ds = toy_dataset()
        spec = ModelSpec(theta=0.3, dataset=ds)
        v = 0.7
        xi = spec.xi
        # place the single cut-point exactly at the conditional center of obs 0
        center = 0.5 * 1.2 + 0.1 + xi * v
        state = ChainState(
            beta=np.array([1.2]), alpha=np.array([0.1, -0.4]),
            latent_l=np.array([center + 0.1, center - 1, center + 0.1, center - 1]),
            latent_v=np.full(4, v), s=np.ones(1), lambda_sq=1.0, phi=1.0,
            cutpoints=np.array([-np.inf, center, np.inf]),
        )
        probs = category_probability(state, spec, 0)
        np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-14)

    def test_rows_sum_to_one(self):
        cfg = ScenarioConfig(scenario="sim1", subjects=6, obs_per_subject=3)
        ds = generate_sim1(cfg, substream(2, 2, 0))
        spec = ModelSpec(theta=0.7, dataset=ds, priors=Priors(delta_min=-3, delta_max=3))
        state = initialize_state(spec, substream(2, 0, 0))
        for i in range(ds.num_observations):
            probs = category_probability(state, spec, i)
            assert probs.shape == (5,)
            assert np.all(probs >= 0.0)
            assert probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_matches_gaussian_quadrature(self):
        # five categories, neutral state: cell c is the Gaussian mass of its interval
        cuts = np.array([-0.8416, -0.2533, 0.2533, 0.8416])
        x = np.zeros((2, 1))
        ds = OrdinalDataset(["s"], np.zeros(2, dtype=int), np.array([1, 5]), x, np.arange(2), 5)
        spec = ModelSpec(theta=0.5, dataset=ds, priors=Priors(delta_min=-3, delta_max=3))
        state = ChainState(
            beta=np.zeros(1), alpha=np.zeros(1),
            latent_l=np.array([-1.0, 1.0]), latent_v=np.ones(2),
            s=np.ones(1), lambda_sq=1.0, phi=1.0,
            cutpoints=np.concatenate([[-np.inf], cuts, [np.inf]]),
        )
        probs = category_probability(state, spec, 0)
        sd = np.sqrt(2.0)
        edges = np.concatenate([[-30.0], cuts, [30.0]])
        expected = [
            quad(lambda t: norm.pdf(t, scale=sd), edges[c], edges[c + 1], limit=200)[0]
            for c in range(5)
        ]
        np.testing.assert_allclose(probs, expected, atol=1e-10)


class TestValidateState:
    def test_detects_threshold_violation(self):
        ds = toy_dataset()
        spec = ModelSpec(theta=0.5, dataset=ds)
        state = initialize_state(spec, substream(1, 0, 0))
        state.latent_l[0] = spec.priors.delta_min - 100.0
        from ordquant.errors import ChainDivergedError

        with pytest.raises(ChainDivergedError):
            validate_state(state, spec)

    def test_detects_disordered_cutpoints(self):
        cuts = np.array([-0.8416, -0.2533, 0.2533, 0.8416])
        cfg = ScenarioConfig(scenario="sim1", subjects=4, obs_per_subject=2)
        ds = generate_sim1(cfg, substream(3, 2, 0))
        spec = ModelSpec(theta=0.5, dataset=ds, priors=Priors(delta_min=-3, delta_max=3))
        state = initialize_state(spec, substream(3, 0, 0))
        state.cutpoints[1], state.cutpoints[2] = state.cutpoints[2], state.cutpoints[1]
        from ordquant.errors import ChainDivergedError

        with pytest.raises(ChainDivergedError):
            validate_state(state, spec)


class TestModelSpec:
    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.5])
    def test_theta_domain(self, theta):
        with pytest.raises(ConfigError):
            ModelSpec(theta=theta, dataset=toy_dataset())

    def test_mixture_constants(self):
        spec = ModelSpec(theta=0.3, dataset=toy_dataset())
        assert spec.xi == pytest.approx(0.4)
        assert spec.zeta == pytest.approx(0.21)
