"""Metrics, chart maps, Jacobians, isometry and diagram residuals."""

import math

import numpy as np
import pytest

from sabr_boundary import (
    ChartPoint,
    DomainError,
    MapId,
    ModelParams,
    SpaceId,
    derive_wedge,
    diagram_residual,
    map_apply,
    map_jacobian,
    map_source,
    map_target,
    metric_tensor,
    pullback_residual,
)

import oracles

ALL_MAPS = tuple(MapId)


def params(beta=0.5, rho=-0.5, nu=1.0, x0=1.0, y0=1.0):
    return ModelParams(beta=beta, rho=rho, nu=nu, x0=x0, y0=y0)


def sample_point(rng, space, rho):
    x = float(np.exp(rng.uniform(-1.2, 1.5)))
    y = float(np.exp(rng.uniform(-1.2, 1.5)))
    return ChartPoint(space=space, x=x, y=y)


def sample_params(rng, *, rho_range=(-0.95, 0.95)):
    return ModelParams(
        beta=float(rng.uniform(0.05, 0.9)),
        rho=float(rng.uniform(*rho_range)),
        nu=1.0,
        x0=1.0,
        y0=1.0,
    )


def test_source_target_table():
    table = {
        MapId.PHI00_TILDE: (SpaceId.S, SpaceId.H),
        MapId.PHI0_HAT: (SpaceId.S, SpaceId.S0),
        MapId.PHI0_BAR: (SpaceId.S, SpaceId.U),
        MapId.PHI0_TILDE: (SpaceId.S0, SpaceId.H),
        MapId.CHI: (SpaceId.S0, SpaceId.S),
        MapId.CHI_BAR: (SpaceId.H, SpaceId.U),
        MapId.VARPHI0_TILDE: (SpaceId.U, SpaceId.H),
    }
    for m, (src, tgt) in table.items():
        assert map_source(m) is src
        assert map_target(m) is tgt


def test_metric_examples():
    p = params(beta=0.0, rho=-0.6)
    h = metric_tensor(ChartPoint(space=SpaceId.H, x=3.0, y=2.0), p)
    assert np.allclose(h, np.diag([0.25, 0.25]), rtol=0, atol=1e-15)

    g0 = metric_tensor(ChartPoint(space=SpaceId.S0, x=0.0, y=1.0),
                       params(beta=0.0, rho=0.0))
    assert np.allclose(g0, np.eye(2), rtol=0, atol=1e-15)

    rho = -0.6
    rb2 = 1.0 - rho * rho
    g = metric_tensor(ChartPoint(space=SpaceId.S, x=1.0, y=1.0),
                      params(beta=0.0, rho=rho))
    ref = np.array([[1.0 / rb2, -rho / rb2], [-rho / rb2, 1.0 / rb2]])
    assert np.allclose(g, ref, rtol=1e-14)
    assert np.linalg.det(g) == pytest.approx(1.0 / rb2, rel=1e-13)


def test_metrics_positive_definite():
    rng = np.random.default_rng(21)
    for _ in range(40):
        p = sample_params(rng)
        for space in SpaceId:
            pt = sample_point(rng, space, p.rho)
            eig = np.linalg.eigvalsh(metric_tensor(pt, p))
            assert np.all(eig > 0.0), (space, pt, p)


def test_metric_domain_errors():
    p = params(beta=0.5)
    with pytest.raises(DomainError):
        metric_tensor(ChartPoint(space=SpaceId.S, x=-1.0, y=1.0), p)
    with pytest.raises(DomainError):
        metric_tensor(ChartPoint(space=SpaceId.H, x=0.0, y=0.0), p)


def test_map_examples():
    p_half = params(beta=0.5, rho=-0.5)
    img = map_apply(MapId.PHI0_HAT, ChartPoint(space=SpaceId.S, x=4.0, y=2.0),
                    p_half)
    assert img.space is SpaceId.S0
    assert (img.x, img.y) == (pytest.approx(4.0, rel=1e-15), 2.0)

    back = map_apply(MapId.CHI, ChartPoint(space=SpaceId.S0, x=4.0, y=2.0),
                     p_half)
    assert back.space is SpaceId.S
    assert (back.x, back.y) == (pytest.approx(4.0, rel=1e-15), 2.0)

    img2 = map_apply(MapId.PHI0_TILDE,
                     ChartPoint(space=SpaceId.S0, x=1.0, y=1.0),
                     params(beta=0.0, rho=-0.6))
    assert img2.space is SpaceId.H
    assert img2.x == pytest.approx(2.0, rel=1e-15)
    assert img2.y == 1.0


def test_map_domain_errors():
    p = params()
    with pytest.raises(DomainError):
        map_apply(MapId.PHI0_TILDE, ChartPoint(space=SpaceId.S, x=1.0, y=1.0), p)
    with pytest.raises(DomainError):
        map_apply(MapId.CHI, ChartPoint(space=SpaceId.S0, x=-1.0, y=1.0), p)
    with pytest.raises(DomainError):
        map_apply(MapId.PHI0_BAR, ChartPoint(space=SpaceId.S, x=1.0, y=1.0),
                  params(rho=0.3))


def test_jacobian_examples():
    j = map_jacobian(MapId.PHI0_TILDE, ChartPoint(space=SpaceId.S0, x=1.0, y=1.0),
                     params(beta=0.0, rho=-0.6))
    assert np.linalg.det(j) == pytest.approx(1.25, rel=1e-14)

    j2 = map_jacobian(MapId.CHI, ChartPoint(space=SpaceId.S0, x=4.0, y=2.0),
                      params(beta=0.5, rho=-0.5))
    assert j2[0, 0] == pytest.approx(2.0, rel=1e-14)


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(33)
    for _ in range(25):
        p = sample_params(rng, rho_range=(-0.95, -0.05))
        for m in ALL_MAPS:
            pt = sample_point(rng, map_source(m), p.rho)

            def fn(x, y, m=m, p=p):
                img = map_apply(m, ChartPoint(space=map_source(m), x=x, y=y), p)
                return img.x, img.y

            jac = map_jacobian(m, pt, p)
            ref = oracles.fd_jacobian(fn, pt.x, pt.y)
            scale = np.abs(ref).max() + 1.0
            assert np.abs(jac - ref).max() <= 1e-6 * scale, (m, pt, p)


def test_pullback_examples():
    r = pullback_residual(MapId.PHI0_TILDE,
                          ChartPoint(space=SpaceId.S0, x=1.0, y=1.0),
                          params(beta=0.0, rho=-0.6))
    assert r <= 1e-12

    r2 = pullback_residual(MapId.PHI0_BAR,
                           ChartPoint(space=SpaceId.S, x=1.0, y=1.0),
                           params(beta=0.5, rho=-0.5))
    assert r2 <= 1e-10

    r3 = pullback_residual(MapId.CHI,
                           ChartPoint(space=SpaceId.S0, x=2.0, y=3.0),
                           params(beta=0.3, rho=0.4))
    assert r3 <= 1e-10


def test_pullback_residuals_randomized():
    rng = np.random.default_rng(47)
    checked = 0
    for _ in range(100):
        p = sample_params(rng)
        for m in ALL_MAPS:
            if m is MapId.PHI0_BAR and p.rho > 0.0:
                continue
            pt = sample_point(rng, map_source(m), p.rho)
            norm = np.abs(metric_tensor(pt, p)).max()
            assert pullback_residual(m, pt, p) <= 1e-10 * norm, (m, pt, p)
            checked += 1
    assert checked >= 100


def test_diagram_examples():
    r = diagram_residual(ChartPoint(space=SpaceId.S, x=4.0, y=1.0),
                         params(beta=0.5, rho=-0.5))
    assert r <= 1e-12

    r0 = diagram_residual(ChartPoint(space=SpaceId.S, x=1.5, y=0.7),
                          params(beta=0.4, rho=0.0))
    assert r0 <= 1e-14

    rb = diagram_residual(ChartPoint(space=SpaceId.S, x=2.5, y=1.3),
                          params(beta=0.0, rho=-0.7))
    assert rb <= 1e-14


def test_diagram_residuals_randomized():
    # residual is already relative (scaled by max(1, |rhs|))
    rng = np.random.default_rng(59)
    for _ in range(100):
        p = sample_params(rng, rho_range=(-0.95, 0.0))
        pt = sample_point(rng, SpaceId.S, p.rho)
        assert diagram_residual(pt, p) <= 1e-12, (pt, p)


def test_diagram_skips_bar_paths_for_positive_rho():
    # identities through phi0_bar are undefined there; the rest must hold
    r = diagram_residual(ChartPoint(space=SpaceId.S, x=1.0, y=1.0),
                         params(rho=0.4))
    assert r <= 1e-12
    with pytest.raises(DomainError):
        diagram_residual(ChartPoint(space=SpaceId.H, x=1.0, y=1.0), params())
    with pytest.raises(DomainError):
        diagram_residual(ChartPoint(space=SpaceId.S, x=0.0, y=1.0), params())


def test_inverse_pairs():
    rng = np.random.default_rng(61)
    for _ in range(50):
        p = sample_params(rng)
        pt = sample_point(rng, SpaceId.S, p.rho)
        rt = map_apply(MapId.CHI, map_apply(MapId.PHI0_HAT, pt, p), p)
        assert abs(rt.x - pt.x) <= 1e-12 * (1.0 + abs(pt.x))
        assert abs(rt.y - pt.y) <= 1e-12 * (1.0 + abs(pt.y))

        ph = sample_point(rng, SpaceId.H, p.rho)
        rt2 = map_apply(MapId.VARPHI0_TILDE, map_apply(MapId.CHI_BAR, ph, p), p)
        assert abs(rt2.x - ph.x) <= 1e-12 * (1.0 + abs(ph.x))
        assert abs(rt2.y - ph.y) <= 1e-12 * (1.0 + abs(ph.y))


def test_phi0_tilde_explicit_inverse():
    rng = np.random.default_rng(67)
    for _ in range(50):
        rho = float(rng.uniform(-0.95, 0.95))
        p = params(beta=0.0, rho=rho)
        rho_bar = math.sqrt(1.0 - rho * rho)
        pt = ChartPoint(space=SpaceId.S0,
                        x=float(rng.normal(scale=2.0)),
                        y=float(np.exp(rng.uniform(-1.0, 1.0))))
        img = map_apply(MapId.PHI0_TILDE, pt, p)
        back_x = rho_bar * img.x + rho * img.y
        assert abs(back_x - pt.x) <= 1e-14 * (1.0 + abs(pt.x))
        assert img.y == pt.y


def test_phi0_bar_determinant_beta_half():
    rng = np.random.default_rng(71)
    for _ in range(30):
        rho = float(rng.uniform(-0.9, 0.0))
        p = params(beta=0.5, rho=rho)
        pt = sample_point(rng, SpaceId.S, rho)
        det = np.linalg.det(map_jacobian(MapId.PHI0_BAR, pt, p))
        ref = (1.0 - rho * pt.y / (2.0 * math.sqrt(pt.x))) / (1.0 - rho * rho)
        assert abs(det - ref) <= 1e-12 * abs(ref), (pt, rho)


def test_composition_order_is_diagrammatic():
    # chi applied first, then the S -> H map, reproduces phi0_tilde
    p = params(beta=0.7, rho=-0.3)
    pt = ChartPoint(space=SpaceId.S0, x=2.0, y=0.9)
    via = map_apply(MapId.PHI00_TILDE, map_apply(MapId.CHI, pt, p), p)
    direct = map_apply(MapId.PHI0_TILDE, pt, p)
    assert abs(via.x - direct.x) <= 1e-12 * (1.0 + abs(direct.x))
    assert abs(via.y - direct.y) <= 1e-12 * (1.0 + abs(direct.y))
