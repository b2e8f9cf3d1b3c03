import itertools
import math

import numpy as np
import pytest
from scipy import stats as scistats

from gpclab import de
from gpclab.codespec import cn_counts, cn_degrees, preset_hpc, preset_pc, preset_staircase
from gpclab.graphsim import (
    ResidualGraph,
    _bernoulli_indices,
    _unrank_triangle,
    core_oracle,
    hpc_demo_graph,
    monte_carlo,
    peel,
    peel_scheduled,
    read_graph,
    sample_residual,
    write_graph,
    write_round_log,
)
from conftest import random_spec


def make_graph(edges, caps):
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    caps = np.asarray(caps, dtype=np.int64)
    return ResidualGraph(
        vertex_position=np.zeros(len(caps), dtype=np.int64),
        vertex_capability=caps,
        edges=np.sort(edges, axis=1) if len(edges) else np.empty((0, 2), np.int64),
        origin_edge_count=len(edges),
    )


class TestDemoFixture:
    def test_weak_components_get_stuck_after_one_round(self):
        result = peel(hpc_demo_graph(1))
        assert result.removed_per_round == (2,)
        assert result.rounds_run == 1
        assert result.failed_fraction == pytest.approx(0.6)
        assert result.survivors.tolist() == [0, 2, 4]

    def test_stronger_components_finish_in_two_rounds(self):
        result = peel(hpc_demo_graph(2))
        assert result.removed_per_round == (3, 2)
        assert result.rounds_run == 2
        assert result.failed_fraction == 0.0
        assert result.surviving_edges == 0


class TestSampling:
    def test_zero_channel_is_empty(self):
        graph = sample_residual(preset_hpc(50, 2), 0.0, seed=3)
        assert graph.num_edges == 0

    def test_probability_one_rejected(self):
        with pytest.raises(ValueError):
            sample_residual(preset_hpc(10, 2), 10.0, seed=0)

    def test_simple_graph_structure(self, rng):
        for k in range(10):
            spec = random_spec(rng, n_scale=8)
            graph = sample_residual(spec, 3.0, seed=k)
            assert (graph.edges[:, 0] < graph.edges[:, 1]).all()
            pairs = set(map(tuple, graph.edges.tolist()))
            assert len(pairs) == graph.num_edges  # no parallel edges
            pos = graph.vertex_position
            for u, v in graph.edges:
                assert spec.eta[pos[u], pos[v]] == 1

    def test_pc_has_no_intra_position_edges(self):
        spec = preset_pc(60, (0.5, 0.5), 2)
        for seed in range(20):
            graph = sample_residual(spec, 4.0, seed=seed)
            pos = graph.vertex_position
            assert (pos[graph.edges[:, 0]] != pos[graph.edges[:, 1]]).all()

    def test_hpc_mean_edge_count(self):
        n, c, trials = 400, 5.5, 400
        m = n * (n - 1) // 2
        p = c / n
        counts = [sample_residual(preset_hpc(n, 4), c, seed=s).num_edges
                  for s in range(trials)]
        expect = m * p  # == (n-1) c / 2
        sigma = math.sqrt(m * p * (1 - p) / trials)
        assert abs(np.mean(counts) - expect) < 3 * sigma
        assert expect == pytest.approx((n - 1) * c / 2)

    def test_deterministic_capability_counts(self):
        from gpclab.poisson import CapabilityDistribution

        tau = CapabilityDistribution.from_dict({2: 0.25, 5: 0.75})
        spec = preset_hpc(80, tau)
        graph = sample_residual(spec, 2.0, seed=1)
        values, counts = np.unique(graph.vertex_capability, return_counts=True)
        assert dict(zip(values.tolist(), counts.tolist())) == {2: 20, 5: 60}

    def test_unrank_triangle_exhaustive(self):
        for n in (2, 3, 5, 11):
            want = list(itertools.combinations(range(n), 2))
            ks = np.arange(len(want), dtype=np.int64)
            r, c = _unrank_triangle(ks, n)
            assert list(zip(r.tolist(), c.tolist())) == want

    def test_bernoulli_indices_density(self):
        gen = np.random.default_rng(5)
        hits = _bernoulli_indices(gen, 200000, 0.01)
        assert (np.diff(hits) > 0).all()
        assert abs(hits.size - 2000) < 3 * math.sqrt(2000)

    def test_degree_law_chi_square(self):
        # degrees at a position follow Binomial(d_k, c/n)
        spec = preset_pc(300, (0.5, 0.5), 3)
        n, c = 300, 4.0
        degrees_expected = cn_degrees(spec)
        counts = cn_counts(spec)
        for seed in range(20):
            graph = sample_residual(spec, c, seed=seed)
            deg = np.bincount(graph.edges.ravel(), minlength=n)
            for pos in range(2):
                sel = deg[graph.vertex_position == pos]
                d_k = int(degrees_expected[pos])
                binom = scistats.binom(d_k, c / n)
                # merge the upper tail so expected counts stay >= 5
                hi = int(binom.ppf(0.9999))
                while counts[pos] * binom.sf(hi - 1) < 5:
                    hi -= 1
                observed = np.zeros(hi + 1)
                for v in sel:
                    observed[min(v, hi)] += 1
                expected = np.array(
                    [binom.pmf(k) for k in range(hi)] + [binom.sf(hi - 1)]
                ) * sel.size
                keep = expected >= 1e-9
                chi2 = ((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum()
                p = scistats.chi2.sf(chi2, keep.sum() - 1)
                assert p > 0.001


class TestPeeling:
    def test_empty_graph(self):
        result = peel(make_graph([], []))
        assert result.failed_fraction == 0.0
        assert result.rounds_run == 0

    def test_edgeless_graph_clears_in_one_round(self):
        result = peel(make_graph([], [2, 2, 2]))
        assert result.failed_fraction == 0.0
        assert result.rounds_run == 1

    def test_complete_graph_strong_capability(self):
        n = 6
        edges = list(itertools.combinations(range(n), 2))
        result = peel(make_graph(edges, [n - 1] * n))
        assert result.rounds_run == 1
        assert result.failed_fraction == 0.0

    def test_cycle_survives_capability_one(self):
        edges = [(i, (i + 1) % 5) for i in range(5)]
        result = peel(make_graph(edges, [1] * 5))
        assert result.failed_fraction == 1.0
        assert result.rounds_run == 0

    def test_tree_peels_inward(self):
        edges = [(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)]
        result = peel(make_graph(edges, [1] * 6))
        assert result.failed_fraction == 0.0

    def test_round_cap(self):
        edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
        capped = peel(make_graph(edges, [1] * 5), ell=1)
        assert capped.rounds_run == 1
        full = peel(make_graph(edges, [1] * 5))
        assert full.rounds_run > 1

    def test_monotone_rounds(self, rng):
        for k in range(10):
            spec = random_spec(rng, n_scale=10)
            graph = sample_residual(spec, 4.0, seed=100 + k)
            result = peel(graph)
            # every executed round removes something, and degrees never rise:
            # re-deriving prefix sums must match a manual replay
            assert all(cnt > 0 for cnt in result.removed_per_round)
            alive = np.ones(graph.num_vertices, dtype=bool)
            edge_alive = np.ones(graph.num_edges, dtype=bool)
            prev_deg = np.bincount(graph.edges.ravel(), minlength=graph.num_vertices)
            for _ in result.removed_per_round:
                deg = np.bincount(graph.edges[edge_alive].ravel(),
                                  minlength=graph.num_vertices)
                assert (deg <= prev_deg).all()
                eligible = alive & (deg <= graph.vertex_capability)
                alive[eligible] = False
                edge_alive &= alive[graph.edges[:, 0]] & alive[graph.edges[:, 1]]
                prev_deg = deg
            assert np.array_equal(np.nonzero(alive)[0], result.survivors)


class TestScheduledPeeling:
    def test_full_schedule_matches_plain(self, rng):
        for k in range(8):
            spec = random_spec(rng, n_scale=10)
            graph = sample_residual(spec, 4.5, seed=200 + k)
            plain = peel(graph)
            sched = peel_scheduled(
                graph, de.full_schedule(spec.num_positions, plain.rounds_run + 2)
            )
            assert np.array_equal(plain.survivors, sched.survivors)
            assert plain.failed_fraction == sched.failed_fraction
            assert plain.surviving_edges == sched.surviving_edges

    def test_window_never_touches_outside(self):
        spec = preset_staircase(6, 60, 2)
        graph = sample_residual(spec, 4.0, seed=9)
        sched = de.window_schedule(6, width=2, steps_per_slide=1)
        # replay manually: removals must stay inside the active window
        alive = np.ones(graph.num_vertices, dtype=bool)
        edge_alive = np.ones(graph.num_edges, dtype=bool)
        for active in sched.active_sets:
            deg = np.bincount(graph.edges[edge_alive].ravel(),
                              minlength=graph.num_vertices)
            eligible = (alive & np.isin(graph.vertex_position, list(active))
                        & (deg <= graph.vertex_capability))
            outside = ~np.isin(graph.vertex_position, list(active))
            assert not (eligible & outside).any()
            alive[eligible] = False
            edge_alive &= alive[graph.edges[:, 0]] & alive[graph.edges[:, 1]]
        result = peel_scheduled(graph, sched)
        assert np.array_equal(result.survivors, np.nonzero(alive)[0])

    def test_hand_traced_row_column_passes(self):
        # two-position instance, rows then columns then rows
        graph = ResidualGraph(
            vertex_position=np.array([0, 0, 0, 1, 1, 1]),
            vertex_capability=np.ones(6, dtype=np.int64),
            edges=np.array([[0, 3], [0, 4], [1, 3], [2, 5]]),
            origin_edge_count=4,
        )
        two_pass = peel_scheduled(
            graph, de.Schedule((frozenset({0}), frozenset({1})))
        )
        assert two_pass.removed_per_round == (2, 3)
        assert two_pass.survivors.tolist() == [0]
        # vertex 0 was only active in round 1 where it still failed
        assert two_pass.failed_fraction == pytest.approx(1 / 6)
        three_pass = peel_scheduled(
            graph, de.Schedule((frozenset({0}), frozenset({1}), frozenset({0})))
        )
        assert three_pass.removed_per_round == (2, 3, 1)
        assert three_pass.failed_fraction == 0.0

    def test_frozen_failure_status_persists(self):
        # position 0 never reactivated: its survivor keeps the old failure flag
        graph = ResidualGraph(
            vertex_position=np.array([0, 1]),
            vertex_capability=np.array([1, 1]),
            edges=np.array([[0, 1]]),
            origin_edge_count=1,
        )
        result = peel_scheduled(
            graph, de.Schedule((frozenset({1}), frozenset({0}), frozenset({1})))
        )
        # round 1: vertex 1 removable (degree 1), vertex 0 frozen-failed;
        # round 2: vertex 0 degree 0, removed; round 3: nothing left
        assert result.failed_fraction == 0.0


class TestCoreOracle:
    def test_cycle_is_two_core(self):
        edges = [(i, (i + 1) % 5) for i in range(5)]
        surv = core_oracle(make_graph(edges, [1] * 5))
        assert surv.tolist() == [0, 1, 2, 3, 4]

    def test_tree_fully_peels(self):
        edges = [(0, 1), (1, 2), (2, 3), (1, 4)]
        assert core_oracle(make_graph(edges, [1] * 5)).size == 0

    def test_matches_parallel_fixpoint(self, rng):
        for k in range(60):
            spec = random_spec(rng, n_scale=6)
            graph = sample_residual(spec, rng.uniform(1.0, 6.0), seed=300 + k)
            assert np.array_equal(core_oracle(graph), peel(graph).survivors)


class TestMonteCarlo:
    def test_zero_channel_exact(self):
        stats = monte_carlo(preset_hpc(200, 3), 0.0, ell=5, trials=5, master_seed=1)
        assert stats.mean_w == 0.0
        assert stats.se_w == 0.0

    def test_bitwise_reproducible(self):
        spec = preset_hpc(300, 3)
        a = monte_carlo(spec, 4.0, ell=8, trials=12, master_seed=77)
        b = monte_carlo(spec, 4.0, ell=8, trials=12, master_seed=77)
        assert a == b

    def test_worker_count_invariant(self):
        spec = preset_hpc(300, 3)
        serial = monte_carlo(spec, 4.5, ell=8, trials=8, master_seed=5, jobs=1)
        parallel = monte_carlo(spec, 4.5, ell=8, trials=8, master_seed=5, jobs=2)
        assert serial == parallel

    def test_supercritical_agreement_with_de(self):
        # above threshold the failed fraction settles at the DE prediction;
        # complements the subcritical (near-zero) acceptance comparison
        n, c, ell, trials = 2000, 7.5, 10, 60
        spec = preset_hpc(n, 4)
        traj = de.de_run(spec, c, ell_max=ell, success_epsilon=0.0)
        z_ell = float(traj.z[ell])
        x_sq = float(traj.x[ell][0]) ** 2
        stats = monte_carlo(spec, c, ell, trials, master_seed=606)
        assert z_ell > 0.1
        assert abs(stats.mean_w - z_ell) <= 3 * stats.se_w + 5 / math.sqrt(n)
        assert abs(stats.mean_scaled_ber - x_sq) <= (
            3 * stats.se_scaled_ber + 5 / math.sqrt(n)
        )

    def test_concentration_with_size(self):
        # supercritical point: the failed fraction tightens as n grows
        c, ell, trials = 7.5, 10, 60
        small = [peel(sample_residual(preset_hpc(500, 4), c, seed=s), ell).failed_fraction
                 for s in range(trials)]
        large = [peel(sample_residual(preset_hpc(2000, 4), c, seed=s), ell).failed_fraction
                 for s in range(trials)]
        assert np.std(large, ddof=1) < np.std(small, ddof=1)

    def test_trials_required(self):
        with pytest.raises(ValueError):
            monte_carlo(preset_hpc(10, 2), 1.0, 1, 0, 0)


class TestIo:
    def test_graph_roundtrip(self, tmp_path, rng):
        spec = random_spec(rng, n_scale=8)
        graph = sample_residual(spec, 3.5, seed=4)
        path = tmp_path / "residual.txt"
        write_graph(graph, str(path))
        back = read_graph(str(path))
        assert np.array_equal(back.vertex_position, graph.vertex_position)
        assert np.array_equal(back.vertex_capability, graph.vertex_capability)
        assert np.array_equal(back.edges, graph.edges)

    def test_round_log(self, tmp_path):
        result = peel(hpc_demo_graph(2))
        path = tmp_path / "rounds.csv"
        write_round_log(result, str(path))
        assert path.read_text() == "round,removed\n1,3\n2,2\n"
