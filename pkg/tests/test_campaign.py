import numpy as np
import pytest

from mamimo.campaign import (
    ExperimentSpec,
    aggregate,
    cross_evaluate,
    derive_seed,
    empirical_cdf,
    fdd_evaluate,
    run_campaign,
    run_realization,
    write_campaign_outputs,
    zero_interference_bound,
)
from mamimo.channels import OfdmGrid, ScenarioConfig, sample_user_positions, subcarrier_channels, synthesize_paths
from mamimo.geometry import make_move_regions, make_staggered_ura
from mamimo.pso import PsoConfig
from mamimo.rates import ImpairedLinkConfig, mmse_combiner, ul_linear_sinr, ul_linear_sum_rate, ul_sic_sum_rate
from mamimo.config import parse_config_dict


def tiny_spec(**overrides):
    base = dict(
        m_rows=2,
        m_cols=2,
        user_counts=(3,),
        subcarrier_counts=(1,),
        evms=(0.02,),
        realizations=2,
        pso_particles=6,
        pso_iterations=3,
        rate_schemes=("ul-lin", "ul-sic"),
        master_seed=99,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


@pytest.fixture(scope="module")
def instance():
    rng = np.random.default_rng(5)
    scen = ScenarioConfig()
    positions = sample_user_positions(rng, scen, 3)
    paths = [synthesize_paths(rng, scen, p) for p in positions]
    layout = make_staggered_ura(2, 2, scen.wavelength)
    grid = OfdmGrid(2, 15e3)
    channels = subcarrier_channels(paths, layout, grid)
    config = ImpairedLinkConfig.uniform(3, 2, 1.5e-5, 0.02, 5.97e-17)
    return channels, config


class TestSeedDerivation:
    def test_stable_and_distinct(self):
        a = derive_seed(1, "channel", 0, 10)
        assert a == derive_seed(1, "channel", 0, 10)
        assert a != derive_seed(1, "channel", 1, 10)
        assert a != derive_seed(2, "channel", 0, 10)
        assert a != derive_seed(1, "pso", 0, 10)

    def test_adding_schemes_leaves_channels_alone(self):
        spec_a = tiny_spec(rate_schemes=("ul-lin",))
        spec_b = tiny_spec(rate_schemes=("ul-lin", "ul-sic"))
        rows_a = run_realization(spec_a, 0).rows
        rows_b = run_realization(spec_b, 0).rows
        picked_a = {(r.array_scheme, r.rate_scheme): r for r in rows_a}
        picked_b = {(r.array_scheme, r.rate_scheme): r for r in rows_b}
        for key, row in picked_a.items():
            assert picked_b[key].sum_rate == row.sum_rate
            assert picked_b[key].channel_seed == row.channel_seed


class TestZeroInterference:
    def test_single_user_equals_mmse_rate(self, instance):
        channels, config = instance
        single = type(channels)(channels.matrices[:, :, :1])
        cfg = ImpairedLinkConfig(config.powers[:, :1], config.evm, config.noise_variance)
        bound = zero_interference_bound(single, cfg)
        lin = ul_linear_sum_rate(single, cfg)
        assert bound.sum_rate == pytest.approx(lin.sum_rate, rel=1e-10)

    def test_ideal_scalar_formula(self):
        from mamimo.channels import SubcarrierChannels

        h = np.full((1, 1, 2), 2.0 + 0j)
        chans = SubcarrierChannels(h)
        cfg = ImpairedLinkConfig.uniform(2, 1, 0.5, 0.0, 0.25)
        bound = zero_interference_bound(chans, cfg)
        expected = 2 * np.log2(1 + 0.5 * 4.0 / 0.25)
        assert bound.sum_rate == pytest.approx(expected, rel=1e-12)

    def test_dominates_linear_and_sic(self, instance):
        channels, config = instance
        bound = zero_interference_bound(channels, config).sum_rate
        assert bound >= ul_linear_sum_rate(channels, config).sum_rate - 1e-10
        assert bound >= ul_sic_sum_rate(channels, config).sum_rate - 1e-10


class TestRunRealization:
    def test_deterministic(self):
        spec = tiny_spec()
        a = run_realization(spec, 1)
        b = run_realization(spec, 1)
        assert a.rows == b.rows

    def test_zero_interference_dominates_every_scheme(self):
        spec = tiny_spec(optimize_scheme="ul-lin")
        output = run_realization(spec, 0)
        zi = {
            (r.users, r.subcarriers, r.evm): r.sum_rate
            for r in output.rows
            if r.array_scheme == "zero-interference" and r.rate_scheme == "ul-lin"
        }
        for row in output.rows:
            if row.array_scheme == "zero-interference" or row.rate_scheme != "ul-lin":
                continue
            assert zi[(row.users, row.subcarriers, row.evm)] >= row.sum_rate - 1e-9

    def test_movable_never_below_seeded_benchmarks(self):
        spec = tiny_spec(optimize_scheme="ul-sic", rate_schemes=("ul-sic",))
        output = run_realization(spec, 0)
        by_array = {r.array_scheme: r.sum_rate for r in output.rows if r.rate_scheme == "ul-sic"}
        assert by_array["movable"] >= by_array["staggered-ura"] - 1e-9
        assert by_array["movable"] >= by_array["sparse-upa"] - 1e-9

    def test_fixed_arrays_have_no_pso_artifacts(self):
        spec = tiny_spec()
        output = run_realization(spec, 0)
        for row in output.rows:
            if row.array_scheme != "movable":
                assert row.pso_seed is None
        assert all(key.count("r0000") for key in output.traces)

    def test_bound_without_movable_runs_no_swarm(self):
        spec = tiny_spec(
            array_schemes=("zero-interference", "staggered-ura"), rate_schemes=("ul-sic",)
        )
        output = run_realization(spec, 0)
        assert not output.traces
        schemes = {r.array_scheme for r in output.rows}
        assert schemes == {"zero-interference", "staggered-ura"}

    def test_bound_alone_is_computable(self):
        spec = tiny_spec(array_schemes=("zero-interference",), rate_schemes=("ul-lin",))
        output = run_realization(spec, 0)
        assert not output.traces
        assert all(r.array_scheme == "zero-interference" for r in output.rows)
        assert all(r.sum_rate > 0 for r in output.rows)

    def test_cross_pair_identity_matches_movable_row(self):
        spec = tiny_spec(
            rate_schemes=("ul-sic",),
            optimize_scheme="ul-sic",
            cross_pairs=(("ul-sic", "ul-sic"),),
        )
        output = run_realization(spec, 0)
        movable = [
            r for r in output.rows if r.array_scheme == "movable" and r.optimized_for == "ul-sic"
        ]
        assert len(movable) == 2  # factorial row plus the cross row
        assert movable[0].sum_rate == pytest.approx(movable[1].sum_rate, rel=1e-12)

    def test_tdd_direction_pair_reuses_layout(self):
        # Optimizing in the uplink and evaluating the downlink at the same
        # carrier must not trigger a second swarm run.
        spec = tiny_spec(
            rate_schemes=("ul-lin",),
            optimize_scheme="ul-lin",
            cross_pairs=(("ul-lin", "dl-lin"),),
        )
        output = run_realization(spec, 0)
        assert len(output.traces) == 1
        dl_rows = [r for r in output.rows if r.rate_scheme == "dl-lin"]
        assert len(dl_rows) == 1
        assert dl_rows[0].array_scheme == "movable"
        assert dl_rows[0].optimized_for == "ul-lin"

    def test_cross_pair_with_new_scheme_adds_trace(self):
        spec = tiny_spec(
            rate_schemes=("ul-sic",),
            optimize_scheme="ul-sic",
            cross_pairs=(("ul-lin", "ul-sic"),),
        )
        output = run_realization(spec, 0)
        assert len(output.traces) == 2  # one per optimizing scheme

    def test_fdd_rows_cover_requested_carriers(self):
        spec = tiny_spec(
            rate_schemes=("ul-sic",),
            array_schemes=("movable", "staggered-ura"),
            fdd_eval_carriers_ghz=(3.0, 2.7),
        )
        output = run_realization(spec, 0)
        groups: dict[tuple, list] = {}
        for r in output.rows:
            groups.setdefault((r.array_scheme, r.carrier_ghz), []).append(r.sum_rate)
        assert {c for _, c in groups} == {3.0, 2.7}
        for (arr, carrier), rates in groups.items():
            if carrier == 3.0:
                # baseline row plus the same-frequency re-evaluation, equal values
                assert len(rates) == 2
                assert rates[0] == pytest.approx(rates[1], rel=1e-12)
            else:
                assert len(rates) == 1


class TestCrossEvaluate:
    def test_identity_pairing(self):
        rng = np.random.default_rng(3)
        scen = ScenarioConfig()
        paths = [
            synthesize_paths(rng, scen, p) for p in sample_user_positions(rng, scen, 2)
        ]
        grid = OfdmGrid(1, 15e3)
        config = ImpairedLinkConfig.uniform(2, 1, 1.5e-5, 0.02, 5.97e-17, total_power=3e-5)
        regions = make_move_regions(2, 2, 5 * scen.wavelength)
        opt, evaluated, trace = cross_evaluate(
            "ul-sic",
            "ul-sic",
            paths,
            grid,
            config,
            regions,
            scen.wavelength,
            PsoConfig(particle_count=5, max_iterations=2),
            np.random.default_rng(0),
        )
        assert opt == pytest.approx(evaluated, rel=1e-12)
        assert np.all(np.diff(trace.best_values) >= 0)

    def test_cross_schemes_both_reported(self):
        rng = np.random.default_rng(4)
        scen = ScenarioConfig()
        paths = [
            synthesize_paths(rng, scen, p) for p in sample_user_positions(rng, scen, 2)
        ]
        grid = OfdmGrid(1, 15e3)
        config = ImpairedLinkConfig.uniform(2, 1, 1.5e-5, 0.02, 5.97e-17, total_power=3e-5)
        regions = make_move_regions(2, 2, 5 * scen.wavelength)
        opt, evaluated, _ = cross_evaluate(
            "ul-sic",
            "ul-lin",
            paths,
            grid,
            config,
            regions,
            scen.wavelength,
            PsoConfig(particle_count=5, max_iterations=2),
            np.random.default_rng(0),
        )
        assert opt >= evaluated - 1e-9  # SIC dominates linear on the same layout


class TestFdd:
    def test_same_frequency_is_identity(self, instance):
        channels, config = instance
        rng = np.random.default_rng(6)
        scen = ScenarioConfig()
        paths = [
            synthesize_paths(rng, scen, p) for p in sample_user_positions(rng, scen, 2)
        ]
        grid = OfdmGrid(2, 15e3)
        cfg = ImpairedLinkConfig.uniform(2, 2, 1.5e-5, 0.02, 5.97e-17)
        layout = make_staggered_ura(2, 2, scen.wavelength)
        base = ul_sic_sum_rate(subcarrier_channels(paths, layout, grid), cfg).sum_rate
        report = fdd_evaluate(layout, paths, grid, cfg, scen.carrier_hz, "ul-sic")
        assert report.sum_rate == pytest.approx(base, rel=1e-12)

    def test_positions_unchanged_and_sequence_produced(self):
        rng = np.random.default_rng(7)
        scen = ScenarioConfig()
        paths = [
            synthesize_paths(rng, scen, p) for p in sample_user_positions(rng, scen, 2)
        ]
        grid = OfdmGrid(1, 15e3)
        cfg = ImpairedLinkConfig.uniform(2, 1, 1.5e-5, 0.02, 5.97e-17)
        layout = make_staggered_ura(2, 2, scen.wavelength)
        before = layout.positions.copy()
        values = [
            fdd_evaluate(layout, paths, grid, cfg, f * 1e9, "ul-sic").sum_rate
            for f in (3.0, 2.9, 2.8, 2.7)
        ]
        np.testing.assert_array_equal(layout.positions, before)
        assert len(set(values)) > 1  # frequency shift changes the rates

    def test_invalid_frequency_rejected(self, instance):
        rng = np.random.default_rng(8)
        scen = ScenarioConfig()
        paths = [synthesize_paths(rng, scen, sample_user_positions(rng, scen, 1)[0])]
        layout = make_staggered_ura(2, 2, scen.wavelength)
        cfg = ImpairedLinkConfig.uniform(1, 1, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            fdd_evaluate(layout, paths, OfdmGrid(1, 15e3), cfg, 0.0, "ul-sic")


class TestAggregation:
    def test_cdf_example(self):
        assert empirical_cdf([3.0, 1.0, 2.0]) == [
            (1.0, pytest.approx(1 / 3)),
            (2.0, pytest.approx(2 / 3)),
            (3.0, pytest.approx(1.0)),
        ]

    def test_cdf_rejects_empty(self):
        with pytest.raises(ValueError):
            empirical_cdf([])

    def test_mean_of_identical_values(self):
        spec = tiny_spec()
        rows = run_realization(spec, 0).rows
        doubled = list(rows) + list(rows)
        agg = aggregate(doubled)
        for series in agg["series"]:
            cdf_values = [v for v, _ in series["cdf"]]
            assert series["mean_sum_rate"] == pytest.approx(np.mean(cdf_values))

    def test_permutation_invariance(self):
        spec = tiny_spec()
        result = run_campaign(spec)
        rows = list(result.rows)
        agg1 = aggregate(rows)
        agg2 = aggregate(rows[::-1])
        assert agg1 == agg2

    def test_aggregate_rejects_empty(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestCampaign:
    def test_serial_equals_parallel(self):
        spec = tiny_spec()
        serial = run_campaign(spec, workers=1)
        parallel = run_campaign(spec, workers=2)
        assert serial.rows == parallel.rows

    def test_rows_per_combination(self):
        spec = tiny_spec(realizations=2)
        result = run_campaign(spec)
        # movable + 3 fixed arrays give rows for both rate schemes; the
        # zero-interference bound row exists per uplink scheme as well.
        expected_per_realization = 4 * 2 + 2
        assert len(result.rows) == 2 * expected_per_realization

    def test_outputs_reproducible_byte_for_byte(self, tmp_path):
        spec = tiny_spec()
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        write_campaign_outputs(run_campaign(spec), out_a)
        write_campaign_outputs(run_campaign(spec), out_b)
        for name in ("results.csv", "user_rates.csv", "summary.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
        layouts_a = sorted(p.name for p in (out_a / "layouts").iterdir())
        layouts_b = sorted(p.name for p in (out_b / "layouts").iterdir())
        assert layouts_a == layouts_b
        for name in layouts_a:
            assert (out_a / "layouts" / name).read_bytes() == (out_b / "layouts" / name).read_bytes()

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            tiny_spec(realizations=0).validate()
        with pytest.raises(ValueError):
            tiny_spec(rate_schemes=()).validate()
        with pytest.raises(ValueError):
            tiny_spec(rate_schemes=("ul-zf",)).validate()
        with pytest.raises(ValueError):
            tiny_spec(evms=(1.0,)).validate()

    def test_paper_scale_flag(self):
        spec = tiny_spec(paper_scale=True)
        assert spec.effective_realizations() == 100
        pso = spec.pso_config()
        assert pso.particle_count == 150
        assert pso.max_iterations == 100

    def test_table_defaults_via_config(self):
        spec = parse_config_dict({})
        assert spec.user_counts == (10,)
        assert spec.m_rows * spec.m_cols == 16
        assert spec.spacing_khz == 15.0
        assert spec.carrier_ghz == 3.0
        assert spec.noise_pw == 3.98
        assert spec.pso_particles == 150
        assert spec.ul_psd_mw_per_mhz == 1.0
        assert spec.r_min_m == 100.0 and spec.r_max_m == 300.0
        assert spec.azimuth_min_rad == pytest.approx(-np.pi / 3)
