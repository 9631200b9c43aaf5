import pytest

from reebmod import oracle
from reebmod import symkernel as sk
from reebmod.oracle import SampleSpec, SamplingError
from reebmod.tensor import AltTensor, Chart

R2 = Chart("R2", ("x", "y"))


def test_sample_points_are_seeded_and_in_bounds():
    spec = SampleSpec(count=30, bounds={"y": (0.5, 2.0)})
    a = oracle.sample_points(R2.coords, [], spec)
    b = oracle.sample_points(R2.coords, [], spec)
    assert a == b and len(a) == 30
    assert all(-2 <= x <= 2 and 0.5 <= y <= 2 for x, y in a)
    assert oracle.sample_points(R2.coords, [], spec.with_(seed=1)) != a


def test_sample_points_avoid_poles():
    e = 1 / (R2.parse("x - y"))
    spec = SampleSpec(count=200, pole_margin=0.05)
    assert all(abs(x - y) >= 0.05 for x, y in oracle.sample_points(R2.coords, [e], spec))


def test_sampling_error_when_no_admissible_point():
    e = 1 / R2.parse("x")
    spec = SampleSpec(count=5, bounds={"x": (-1e-6, 1e-6)}, max_retries=2)
    with pytest.raises(SamplingError):
        oracle.sample_points(R2.coords, [e], spec)


@pytest.mark.parametrize("kw", [{"count": 0}, {"box": (1.0, 1.0)}, {"bounds": {"x": (2.0, 1.0)}}])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        SampleSpec(**kw)


def test_check_identity_accepts_equal_and_rejects_unequal():
    a = AltTensor.scalar(R2, R2.parse("(x + y)^2"))
    b = AltTensor.scalar(R2, R2.parse("x^2 + 2*x*y + y^2"))
    c = AltTensor.scalar(R2, R2.parse("x^2 + y^2 + 1/1000000"))
    ok = oracle.check_identity(a, b)
    assert ok.passed and ok.points == 100
    bad = oracle.check_identity(a, c)
    assert not bad.passed and bad.worst_residual > 1e-9 and bad.worst_point is not None


def test_fd_derivative_check():
    e = R2.parse("exp(x) * sin(y)")
    assert oracle.fd_derivative_check(R2.coords, e, "x").passed


def test_fd_coarse_step_on_stiff_function_fails():
    e = R2.parse("exp(10*x)")
    spec = SampleSpec(fd_step=0.1, box=(-1.0, 1.0))
    report = oracle.fd_derivative_check(R2.coords, e, "x", spec)
    assert not report.passed and report.worst_residual > spec.tol_rel


def test_spec_context():
    spec = SampleSpec(count=7)
    with oracle.using_spec(spec):
        assert oracle.current_spec() is spec
    assert oracle.current_spec().count == 100


def test_fd_cross_checks_symbolic_diff_on_random_expressions():
    for text in ["x^3*y - 2*y", "log(x^2 + 1) * cos(y)", "exp(x*y) / (1 + y^2)"]:
        e = R2.parse(text)
        for v in R2.coords:
            assert oracle.fd_derivative_check(R2.coords, e, v).passed
    assert sk.canonical(R2.parse("x")) == R2.symbols[0]
