import numpy as np
import pytest

from preimage_forge import (
    DemonsConfig,
    DimensionError,
    Image,
    METRICS_FIELDS,
    NumericalError,
    ObjectiveSpec,
    OctaveSchedule,
    OctaveStage,
    ParameterError,
    RegularizerSpec,
    build_network,
    conv,
    convolve,
    demons_step,
    dirac,
    dirichlet,
    jitter_shift,
    read_metrics_csv,
    replace_weights,
    run,
    sobolev_kernel,
    write_metrics_csv,
)


def constant_objective(gradient):
    return ObjectiveSpec("constant", gradient=np.asarray(gradient, dtype=np.float64))


def identity_net(h, w):
    """1x1 conv with unit weight: the feature code is the image itself."""
    net = build_network((h, w, 1), [conv(1, 1)], seed=0)
    return replace_weights(net, 0, weight=np.ones((1, 1, 1, 1)), bias=np.zeros(1))


@pytest.fixture
def smooth_kernel():
    return sobolev_kernel(5, 1.0)


def test_dirac_kernels_reduce_to_plain_gd(smooth_kernel):
    rng = np.random.default_rng(0)
    init = Image(rng.uniform(0, 1, (12, 12, 1)))
    g = rng.standard_normal((12, 12, 1))
    plain = DemonsConfig(step_size=0.05, steps=50)
    withdirac = DemonsConfig(step_size=0.05, steps=50, fluid_kernel=dirac(3), elastic_kernel=dirac(3))
    ra = run(None, constant_objective(g), plain, init=init)
    rb = run(None, constant_objective(g), withdirac, init=init)
    np.testing.assert_array_equal(ra.final.data, rb.final.data)


def test_fluid_telescoping_for_frozen_gradient(smooth_kernel):
    rng = np.random.default_rng(1)
    init = Image(rng.uniform(0, 1, (16, 16, 1)))
    g = rng.standard_normal((16, 16, 1))
    n, tau = 20, 0.03
    cfg = DemonsConfig(step_size=tau, steps=n, fluid_kernel=smooth_kernel)
    res = run(None, constant_objective(g), cfg, init=init)
    smoothed = convolve(Image(np.ascontiguousarray(g)), smooth_kernel).data
    want = init.data - n * tau * smoothed
    assert np.abs(res.final.data - want).max() <= 1e-10


def test_elastic_zero_gradient_is_repeated_self_convolution(smooth_kernel):
    rng = np.random.default_rng(2)
    init = Image(rng.uniform(0, 1, (14, 14, 1)))
    n = 10
    cfg = DemonsConfig(step_size=1.0, steps=n, elastic_kernel=smooth_kernel)
    res = run(None, constant_objective(np.zeros((14, 14, 1))), cfg, init=init)
    want = init
    for _ in range(n):
        want = convolve(want, smooth_kernel)
    assert np.abs(res.final.data - want.data).max() <= 1e-10


def test_fluid_zero_gradient_leaves_iterate_unchanged(smooth_kernel):
    rng = np.random.default_rng(3)
    init = Image(rng.uniform(0, 1, (10, 10, 1)))
    cfg = DemonsConfig(step_size=2.0, steps=7, fluid_kernel=smooth_kernel)
    res = run(None, constant_objective(np.zeros((10, 10, 1))), cfg, init=init)
    np.testing.assert_array_equal(res.final.data, init.data)


def test_elastic_zero_gradient_dirichlet_never_increases(smooth_kernel):
    rng = np.random.default_rng(4)
    u = Image(rng.uniform(0, 1, (12, 12, 1)))
    energies = [dirichlet(u)[0]]
    zero = Image(np.zeros((12, 12, 1)))
    cfg = DemonsConfig(step_size=1.0, steps=1, elastic_kernel=smooth_kernel)
    for _ in range(12):
        u = demons_step(u, zero, cfg)
        energies.append(dirichlet(u)[0])
    diffs = np.diff(energies)
    assert (diffs <= 1e-12).all()
    assert energies[-1] < energies[0]


def test_quadratic_descent_contracts_geometrically():
    # identity feature map makes the data term an exact quadratic, so plain
    # GD satisfies u_k - t = (1 - 2 tau / Z)^k (u_0 - t)
    h = w = 8
    net = identity_net(h, w)
    rng = np.random.default_rng(5)
    target_img = Image(rng.uniform(0, 1, (h, w, 1)))
    from preimage_forge import forward

    target = forward(net, target_img, 0)
    z = float(target.values @ target.values)
    obj = ObjectiveSpec("inversion", layer=0, target=target, p=2, z="auto")
    tau = 0.05 * z  # keep the contraction factor comfortably inside (0, 1)
    n = 30
    init = Image(rng.uniform(0, 1, (h, w, 1)))
    res = run(net, obj, DemonsConfig(step_size=tau, steps=n), init=init)
    factor = (1.0 - 2.0 * tau / z) ** 2
    d0 = res.metrics[0].data_term
    for k, m in enumerate(res.metrics):
        assert m.data_term == pytest.approx(d0 * factor**k, rel=1e-9)


def test_single_step_run_equals_demons_step(smooth_kernel):
    rng = np.random.default_rng(6)
    init = Image(rng.uniform(0, 1, (9, 9, 1)))
    g = rng.standard_normal((9, 9, 1))
    cfg = DemonsConfig(step_size=0.7, steps=1, fluid_kernel=smooth_kernel, clamp=True)
    res = run(None, constant_objective(g), cfg, init=init)
    want = demons_step(init, Image(g), cfg)
    np.testing.assert_array_equal(res.final.data, want.data)


def test_jitter_shift_identity_and_interior_round_trip():
    rng = np.random.default_rng(7)
    img = Image(rng.uniform(0, 1, (8, 10, 1)))
    np.testing.assert_array_equal(jitter_shift(img, (0, 0)).data, img.data)
    # shifting +2 drops the two rightmost columns, so the round trip restores
    # everything that never left the frame: columns [0, W-2)
    back = jitter_shift(jitter_shift(img, (2, 0)), (-2, 0))
    np.testing.assert_array_equal(back.data[:, :8], img.data[:, :8])
    const = Image(np.full((5, 5, 1), 0.3))
    np.testing.assert_array_equal(jitter_shift(const, (3, -2)).data, const.data)


def test_jitter_shift_moves_content():
    img = np.zeros((5, 5, 1))
    img[2, 2, 0] = 1.0
    moved = jitter_shift(Image(img), (1, 2)).data
    assert moved[4, 3, 0] == 1.0


def test_jitter_shift_out_of_range():
    img = Image(np.zeros((4, 4, 1)))
    with pytest.raises(ParameterError):
        jitter_shift(img, (5, 0))


def test_run_with_jitter_is_seed_deterministic(smooth_kernel):
    net = identity_net(12, 12)
    rng = np.random.default_rng(8)
    from preimage_forge import forward

    target = forward(net, Image(rng.uniform(0, 1, (12, 12, 1))), 0)
    obj = ObjectiveSpec("inversion", layer=0, target=target, p=2, z="auto")
    sched = OctaveSchedule((OctaveStage(1.0, 25, 0.05),), jitter_fraction=0.2)
    cfg = DemonsConfig(step_size=0.05, steps=25, fluid_kernel=smooth_kernel, seed=11)
    a = run(net, obj, cfg, schedule=sched)
    b = run(net, obj, cfg, schedule=sched)
    np.testing.assert_array_equal(a.final.data, b.final.data)
    c = run(net, obj, DemonsConfig(step_size=0.05, steps=25, fluid_kernel=smooth_kernel, seed=12), schedule=sched)
    assert np.any(c.final.data != a.final.data)


def test_octave_schedule_resamples_and_logs_octave_column():
    # feature codes of spatial layers change length across scales, so the
    # octave test drives a unit objective that exists at every scale
    net = identity_net(16, 16)
    obj = ObjectiveSpec("activation_max", layer=0, unit=0, z=1.0)
    sched = OctaveSchedule((OctaveStage(0.5, 3, 0.01), OctaveStage(1.0, 4, 0.01)))
    cfg = DemonsConfig(step_size=0.01, steps=1, seed=0)
    res = run(net, obj, cfg, schedule=sched)
    assert res.final.shape == (16, 16, 1)
    assert [m.octave for m in res.metrics] == [1, 1, 1, 2, 2, 2, 2]
    assert [m.step for m in res.metrics] == list(range(7))


def test_octave_scales_must_not_decrease():
    with pytest.raises(ParameterError):
        OctaveSchedule((OctaveStage(1.0, 1, 0.1), OctaveStage(0.5, 1, 0.1)))


def test_jitter_fraction_bounded():
    with pytest.raises(ParameterError):
        OctaveSchedule((OctaveStage(1.0, 1, 0.1),), jitter_fraction=0.31)
    with pytest.raises(ParameterError):
        OctaveSchedule((OctaveStage(1.0, 1, 0.1),), jitter_fraction=-0.1)


def test_clamp_keeps_samples_in_unit_interval():
    rng = np.random.default_rng(10)
    init = Image(rng.uniform(0, 1, (8, 8, 1)))
    g = 10.0 * rng.standard_normal((8, 8, 1))
    cfg = DemonsConfig(step_size=1.0, steps=5, clamp=True)
    res = run(None, constant_objective(g), cfg, init=init)
    assert res.final.data.min() >= 0.0
    assert res.final.data.max() <= 1.0


def test_divergence_raises_numerical_error_with_step_and_metrics():
    # an expansive quadratic: contraction factor (1 - 2 tau / z) far below -1,
    # so the iterate blows up after a known number of doublings
    net = identity_net(6, 6)
    from preimage_forge import forward

    target = forward(net, Image(np.full((6, 6, 1), 0.5)), 0)
    obj = ObjectiveSpec("inversion", layer=0, target=target, p=2, z=1e-6)
    cfg = DemonsConfig(step_size=1.0, steps=500)
    with np.errstate(over="ignore"), pytest.raises(NumericalError) as info:
        run(net, obj, cfg, init=Image(np.full((6, 6, 1), 0.4)))
    err = info.value
    assert err.step is not None and err.step > 0
    assert err.last_metrics is not None
    assert err.last_metrics.step == err.step - 1


def test_immediate_overflow_reports_step_zero():
    init = Image(np.full((4, 4, 1), 0.5))
    g = np.full((4, 4, 1), 1e308)
    cfg = DemonsConfig(step_size=10.0, steps=3)
    with np.errstate(over="ignore"), pytest.raises(NumericalError) as info:
        run(None, constant_objective(g), cfg, init=init)
    assert info.value.step == 0
    assert info.value.last_metrics is None


def test_kernel_larger_than_image_rejected(smooth_kernel):
    img = Image(np.zeros((4, 4, 1)))
    cfg = DemonsConfig(step_size=0.1, steps=1, fluid_kernel=smooth_kernel)
    with pytest.raises(DimensionError):
        demons_step(img, Image(np.zeros((4, 4, 1))), cfg)


def test_regularizer_contributes_to_gradient_and_metrics(smooth_kernel):
    rng = np.random.default_rng(12)
    init = Image(rng.uniform(0, 1, (10, 10, 1)))
    g = np.zeros((10, 10, 1))
    lam = 0.25
    cfg = DemonsConfig(
        step_size=0.1, steps=1, regularizer=RegularizerSpec("dirichlet", lam)
    )
    res = run(None, constant_objective(g), cfg, init=init)
    dval, dgrad = dirichlet(init)
    assert res.metrics[0].reg_term == pytest.approx(lam * dval, rel=1e-12)
    assert res.metrics[0].total == pytest.approx(res.metrics[0].data_term + lam * dval, rel=1e-12)
    want = init.data - 0.1 * lam * dgrad.data
    np.testing.assert_allclose(res.final.data, want, atol=1e-14)


def test_metrics_csv_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    init = Image(rng.uniform(0, 1, (6, 6, 1)))
    g = rng.standard_normal((6, 6, 1))
    res = run(None, constant_objective(g), DemonsConfig(step_size=0.01, steps=4), init=init)
    path = tmp_path / "metrics.csv"
    write_metrics_csv(res.metrics, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(METRICS_FIELDS)
    back = read_metrics_csv(path)
    assert len(back) == 4
    for got, want in zip(back, res.metrics):
        assert got == want


def test_run_result_reports_wall_time():
    init = Image(np.full((4, 4, 1), 0.5))
    res = run(None, constant_objective(np.zeros((4, 4, 1))), DemonsConfig(step_size=1.0, steps=1), init=init)
    assert res.wall_time >= 0.0
