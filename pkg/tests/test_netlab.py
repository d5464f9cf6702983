"""Net-level experiments: moderateness fits, negligibility, consistency,
report emission."""

import numpy as np
import pytest

from vwschro.errors import InsufficientDataError, ParameterError, VwschroError
from vwschro.fitting import fit_power_growth
from vwschro.netlab import (
    EpsNet,
    PerturbationSpec,
    emit_reports,
    fit_moderateness,
    run_net,
)
from vwschro.netlab import test_consistency as consistency_check
from vwschro.netlab import test_negligibility as negligibility_check
from vwschro.problems import (
    consistency_case_1d,
    delta_showcase_1d,
    smooth_classical_1d,
)
from vwschro.conjugate1d import solve_original
from vwschro.regularize import Scale, build_mollifier, regularize_space
from vwschro.dist import Delta
from vwschro.spectral import Grid, GridFn, sobolev_norm

NET4 = (0.2, 0.1, 0.05, 0.025)


class TestEpsNet:
    def test_validation(self):
        with pytest.raises(ParameterError):
            EpsNet(points=(0.2, 0.1))  # too few
        with pytest.raises(ParameterError):
            EpsNet(points=(0.1, 0.2, 0.05, 0.025))  # not decreasing

    def test_ok(self):
        net = EpsNet(points=NET4)
        assert net.points == NET4


def _smooth_solver(grid, dt=2e-3, m_set=(0, 1, 2), T=0.3):
    def solve_point(eps):
        return solve_original(smooth_classical_1d(eps, grid=grid, T=T),
                              dt=dt, m_set=m_set)

    return solve_point


class TestRunNet:
    def test_smooth_control_all_succeed(self, grid1d):
        sn = run_net(_smooth_solver(grid1d), EpsNet(points=NET4))
        assert len(sn.successful()) == 4
        assert not sn.failures
        # norms essentially independent of eps (within 5 percent)
        sups = [sn.trajectories[e].sup_norm(0) for e in NET4]
        assert max(sups) / min(sups) < 1.05

    def test_partial_failure_recorded(self, grid1d):
        base = _smooth_solver(grid1d)

        def flaky(eps):
            if eps == 0.05:
                raise VwschroError("synthetic point failure")
            return base(eps)

        sn = run_net(flaky, EpsNet(points=NET4))
        assert 0.05 in sn.failures
        assert len(sn.successful()) == 3

    def test_all_failing_raises(self):
        def broken(eps):
            raise VwschroError("nope")

        with pytest.raises(VwschroError):
            run_net(broken, EpsNet(points=NET4))

    def test_concurrent_matches_serial(self, grid1d):
        solver = _smooth_solver(grid1d, dt=5e-3)
        sn1 = run_net(solver, EpsNet(points=NET4), workers=1)
        sn2 = run_net(solver, EpsNet(points=NET4), workers=2)
        for e in NET4:
            a = sn1.trajectories[e].sup_norm(0)
            b = sn2.trajectories[e].sup_norm(0)
            assert a == b


class TestModerateness:
    def test_classical_control_flat(self, grid1d):
        sn = run_net(_smooth_solver(grid1d), EpsNet(points=NET4))
        rep = fit_moderateness(sn, 0)
        assert rep.finite
        assert abs(rep.exponent) < 0.1

    def test_showcase_finite_with_good_fit(self):
        g = Grid(1, 2048, 20.0)

        def solve_point(eps):
            return solve_original(delta_showcase_1d(eps, grid=g), dt=1e-3,
                                  m_set=(0, 1, 2))

        sn = run_net(solve_point, EpsNet(points=NET4))
        for m in (0, 1, 2):
            rep = fit_moderateness(sn, m)
            assert rep.finite
            assert rep.residual < 0.10

    def test_data_singularity_tracks_datum(self, band_mollifier):
        # the L2 norm of the solution follows the L2 norm of the datum
        # when only the datum is singular (compared against the
        # regularization-side fit of |g_eps|)
        g = Grid(1, 1024, 20.0)

        def solve_point(eps):
            return solve_original(
                smooth_classical_1d(eps, grid=g, T=0.3, datum="delta"),
                dt=2e-3, m_set=(0,))

        sn = run_net(solve_point, EpsNet(points=NET4))
        rep = fit_moderateness(sn, 0)
        datum_sups = [
            sobolev_norm(regularize_space(Delta(0.0), band_mollifier,
                                          Scale("standard"), e, g).values, 0)
            for e in NET4
        ]
        N_g, _, _ = fit_power_growth(NET4, datum_sups)
        assert abs(rep.exponent - N_g) < 0.2

    def test_insufficient_points(self, grid1d):
        base = _smooth_solver(grid1d, dt=5e-3)

        def flaky(eps):
            if eps < 0.09:
                raise VwschroError("fail small eps")
            return base(eps)

        sn = run_net(flaky, EpsNet(points=NET4))
        with pytest.raises(InsufficientDataError):
            fit_moderateness(sn, 0)


class TestPerturbationSpec:
    def test_b1_requires_decay_tag(self):
        with pytest.raises(ParameterError):
            PerturbationSpec(target="b1", rate=3)
        PerturbationSpec(target="b1", rate=3, decay_tag="x^-2")

    def test_a_requires_positivity(self):
        with pytest.raises(ParameterError):
            PerturbationSpec(target="a", rate=2, preserves_positivity=False)

    def test_rate_positive(self):
        with pytest.raises(ParameterError):
            PerturbationSpec(target="g", rate=0)


class TestNegligibility:
    def _paired_g(self, grid, q, T=0.3, dt=2e-3):
        def paired(eps, perturbed):
            gp = (lambda x: eps**q * np.exp(-((x - 1.0) ** 2))) if perturbed else None
            return solve_original(
                smooth_classical_1d(eps, grid=grid, T=T, g_pert=gp),
                dt=dt, m_set=(0,), store_stride=20)

        return paired

    def test_zero_perturbation_anchor(self, grid1d):
        pert = PerturbationSpec(target="g", rate=3)
        rep = negligibility_check(self._paired_g(grid1d, 3), EpsNet(points=NET4),
                                 pert, m=0)
        assert rep.anchor_max < 1e-8

    def test_data_perturbation_rate(self, grid1d):
        # paired-solve oracle: the linear problem propagates data
        # perturbations at unit amplification order
        pert = PerturbationSpec(target="g", rate=3)
        rep = negligibility_check(self._paired_g(grid1d, 3), EpsNet(points=NET4),
                                 pert, m=0)
        assert abs(rep.decay_exponent - 3.0) < 0.3
        assert rep.verdict

    def test_b1_perturbation(self):
        g = Grid(1, 2048, 20.0)
        q = 4
        x = g.axis()
        shape = GridFn(g, np.exp(-(x**2)) / (1.0 + x**2))
        pert = PerturbationSpec(target="b1", rate=q, decay_tag="x^-2")

        def paired(eps, perturbed):
            b1p = shape * (eps**q) if perturbed else None
            return solve_original(
                smooth_classical_1d(eps, grid=g, T=0.3, b1_pert=b1p),
                dt=2e-3, m_set=(0,), store_stride=20)

        rep = negligibility_check(paired, EpsNet(points=NET4), pert, m=0)
        assert rep.verdict
        assert rep.decay_exponent >= q - max(rep.moderateness_exponent, 0.0) - 0.5


class TestConsistency:
    def test_bandlimited_identity(self):
        g = Grid(1, 512, 20.0)
        case = consistency_case_1d("bandlimited", grid=g, dt=2e-3)
        rep = consistency_check(case, EpsNet(points=(0.4, 0.2, 0.1, 0.05)),
                               m_set=(0,))
        assert all(e < 1e-9 for e in rep.errors[0])

    def test_smooth_vanishing_moment_order(self):
        g = Grid(1, 1024, 20.0)
        case = consistency_case_1d("smooth", grid=g, dt=2e-3)
        rep = consistency_check(case, EpsNet(points=(0.4, 0.2, 0.1, 0.05)),
                               m_set=(0, 1))
        assert rep.monotone
        assert all(f >= 2.0 for f in rep.halving_factors)
        assert rep.orders[0] >= 2.0
        assert rep.converging

    def test_bump_control_first_order(self):
        g = Grid(1, 1024, 20.0)
        smooth = consistency_case_1d("smooth", grid=g, dt=2e-3)
        bump = consistency_case_1d("bump", grid=g, dt=2e-3)
        net = EpsNet(points=(0.4, 0.2, 0.1, 0.05))
        rep_s = consistency_check(smooth, net, m_set=(0,))
        rep_b = consistency_check(bump, net, m_set=(0,))
        assert abs(rep_b.orders[0] - 1.0) < 0.35
        assert rep_b.orders[0] < rep_s.orders[0]

    def test_gaps_recorded(self):
        g = Grid(1, 512, 20.0)
        case = consistency_case_1d("smooth", grid=g, dt=5e-3, T=0.2)
        rep = consistency_check(case, EpsNet(points=(0.4, 0.2, 0.1, 0.05)),
                               m_set=(0,))
        assert len(rep.gaps) == 4
        assert all("b1_gap" in gdict for gdict in rep.gaps)


class TestEmitReports:
    def test_empty_manifest(self, tmp_path):
        manifest = emit_reports([], tmp_path)
        assert manifest["count"] == 0
        assert (tmp_path / "manifest.json").exists()

    def test_roundtrip_byte_identical(self, tmp_path, grid1d):
        sn = run_net(_smooth_solver(grid1d, dt=5e-3), EpsNet(points=NET4))
        rep = fit_moderateness(sn, 0)
        emit_reports([rep], tmp_path / "a")
        emit_reports([rep], tmp_path / "b")
        for name in ("moderateness_000.csv", "moderateness_000.json",
                     "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_reparse(self, tmp_path, grid1d):
        from vwschro.reporting import read_csv, write_csv

        sn = run_net(_smooth_solver(grid1d, dt=5e-3), EpsNet(points=NET4))
        rep = fit_moderateness(sn, 1)
        emit_reports([rep], tmp_path)
        header, rows = read_csv(tmp_path / "moderateness_000.csv")
        assert [float(r[0]) for r in rows] == list(NET4)
        # re-serialize: byte-identical through the float repr round trip
        again = tmp_path / "again.csv"
        write_csv(again, header, [(float(a), float(b)) for a, b in rows])
        assert again.read_bytes() == (tmp_path / "moderateness_000.csv").read_bytes()

    def test_manifest_references_every_csv(self, tmp_path, grid1d):
        sn = run_net(_smooth_solver(grid1d, dt=5e-3), EpsNet(points=NET4))
        reports = [fit_moderateness(sn, m) for m in (0, 1, 2)]
        manifest = emit_reports(reports, tmp_path)
        csvs = {e["files"]["csv"] for e in manifest["entries"]}
        on_disk = {p.name for p in tmp_path.glob("*.csv")}
        assert csvs == on_disk
