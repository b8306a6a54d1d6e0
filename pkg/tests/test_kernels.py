from math import pi

import numpy as np
import pytest
from scipy import integrate

from halfspace_neumann.kernels import (KernelConstants, green_kernel, green_kernel_gradient,
                                       neumann_kernel, neumann_kernel_gradient, reflect,
                                       riesz_kernel, sphere_area)


@pytest.fixture
def c3():
    return KernelConstants.derived(3)


def test_constants_n3(c3):
    assert c3.beta == pytest.approx(1 / (2 * pi ** 2), rel=1e-15)
    assert c3.gamma == pytest.approx(1 / (4 * pi ** 2), rel=1e-15)
    assert c3.sigma == pytest.approx(2 * pi ** 2, rel=1e-15)
    assert KernelConstants.alternate(3).beta == pytest.approx(pi ** 2, rel=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_normalization_invariant(n):
    from math import gamma
    c = KernelConstants.derived(n)
    assert c.beta * (n - 1) * pi ** ((n + 1) / 2) / gamma((n + 1) / 2) == pytest.approx(1.0)
    assert c.beta == pytest.approx(2 * c.gamma)
    assert sphere_area(2) == pytest.approx(2 * pi)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_dt_kernel_integrates_to_one(n):
    # -int_{R^n} d_t K(x, t) dx = 1 for every t > 0 (radial quadrature oracle)
    c = KernelConstants.derived(n)
    t = 0.37
    radial = lambda r: -neumann_kernel_gradient(np.array([r] + [0.0] * (n - 1)), t, c)[-1] \
        * sphere_area(n) * r ** (n - 1)
    val = integrate.quad(radial, 0, np.inf, limit=200)[0]
    assert val == pytest.approx(1.0, rel=1e-8)


def test_neumann_kernel_values(c3):
    t = 0.7
    assert neumann_kernel(np.zeros(3), t, c3) == pytest.approx(c3.beta * t ** -2)
    e1 = np.array([1.0, 0, 0])
    assert neumann_kernel(2 * e1, 2.0, c3) == pytest.approx(2 ** -2 * neumann_kernel(e1, 1.0, c3))
    g = neumann_kernel_gradient(np.zeros(3), t, c3)
    np.testing.assert_allclose(g[:3], 0.0)
    assert g[3] == pytest.approx(-2 * c3.beta * t ** -3)
    with pytest.raises(ValueError):
        neumann_kernel(e1, 0.0, c3)
    with pytest.raises(ValueError):
        neumann_kernel_gradient(e1, -1.0, c3)


def test_neumann_gradient_fd_and_bound(c3, rng):
    x = rng.normal(size=3)
    t = 0.8
    errs = []
    for h in (1e-2, 5e-3):
        fd = [(neumann_kernel(x + h * e, t, c3) - neumann_kernel(x - h * e, t, c3)) / (2 * h)
              for e in np.eye(3)]
        fd.append((neumann_kernel(x, t + h, c3) - neumann_kernel(x, t - h, c3)) / (2 * h))
        errs.append(np.max(np.abs(np.array(fd) - neumann_kernel_gradient(x, t, c3))))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    X = rng.normal(size=(500, 3))
    T = rng.uniform(0.01, 3, size=500)
    grad = np.linalg.norm(neumann_kernel_gradient(X, T, c3), axis=-1)
    bound = c3.neumann_gradient_bound * (np.sum(X ** 2, axis=-1) + T ** 2) ** (-3 / 2)
    assert np.all(grad <= bound * (1 + 1e-12))


def test_reflect():
    Y = np.array([0.3, -1.0, 2.0, 0.5])
    np.testing.assert_array_equal(reflect(reflect(Y)), Y)
    B = np.array([0.3, -1.0, 2.0, 0.0])
    np.testing.assert_array_equal(reflect(B), B)


def test_green_kernel_properties(c3, rng):
    X = rng.normal(size=(200, 4))
    Y = rng.normal(size=(200, 4))
    X[:, 3] = np.abs(X[:, 3])
    Y[:, 3] = np.abs(Y[:, 3]) + 1e-3
    G1 = green_kernel(X, Y, c3)
    np.testing.assert_allclose(G1, green_kernel(Y, X, c3), rtol=1e-14)
    r = np.linalg.norm(X - Y, axis=-1)
    assert np.all(G1 > 0) and np.all(G1 <= 2 * c3.gamma * r ** -2 * (1 + 1e-14))
    assert np.all(np.linalg.norm(X - reflect(Y), axis=-1) >= r - 1e-14)
    np.testing.assert_allclose(green_kernel(2.5 * X, 2.5 * Y, c3), 2.5 ** -2 * G1, rtol=1e-13)
    np.testing.assert_allclose(G1, riesz_kernel(X - Y, c3) + riesz_kernel(X - reflect(Y), c3),
                               rtol=1e-14)
    grad = np.linalg.norm(green_kernel_gradient(X, Y, c3), axis=-1)
    assert np.all(grad <= c3.green_gradient_bound * r ** -3 * (1 + 1e-12))
    # on the boundary both images coincide
    Xb = X.copy()
    Xb[:, 3] = 0
    np.testing.assert_allclose(green_kernel(Xb, Y, c3),
                               2 * c3.gamma * np.linalg.norm(Xb - Y, axis=-1) ** -2, rtol=1e-13)


def test_riesz_kernel(c3):
    assert riesz_kernel(np.array([0, 0, 0, 1.0]), c3) == pytest.approx(1 / (4 * pi ** 2))
    Z = np.array([0.3, 0.2, -0.1, 0.4])
    assert riesz_kernel(3 * Z, c3) == pytest.approx(3 ** -2 * riesz_kernel(Z, c3))
    with pytest.raises(ValueError):
        riesz_kernel(np.zeros(4), c3)
    with pytest.raises(ValueError):
        green_kernel(Z, Z, c3)
