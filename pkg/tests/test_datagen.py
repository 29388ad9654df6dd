import numpy as np
import pytest

from pfkernel.datagen import ORBIT_R_VALUES, OrbitSpec, changepoint_sequence, orbit, orbit_dataset, twist_orbit


def reference_orbit(r, s, t, n):
    out = [(s, t)]
    for _ in range(n - 1):
        s = (s + r * t * (1 - t)) % 1.0
        t = (t + r * s * (1 - s)) % 1.0
        out.append((s, t))
    return np.array(out)


def test_one_step_by_hand():
    assert twist_orbit(2.0, 0.5, 0.5, 2)[1].tolist() == [0.0, 0.5]


@pytest.mark.parametrize("r", ORBIT_R_VALUES)
def test_matches_reference(r):
    rng = np.random.default_rng(int(r * 10))
    s0, t0 = rng.random(2)
    ours = twist_orbit(r, s0, t0, 1000)
    np.testing.assert_allclose(ours, reference_orbit(r, s0, t0, 1000), atol=1e-12, rtol=0)
    assert ours.min() >= 0 and ours.max() < 1


def test_seeds():
    a = orbit(OrbitSpec(4.1, 50, 3))
    assert np.array_equal(a, orbit(OrbitSpec(4.1, 50, 3)))
    firsts = {tuple(orbit(OrbitSpec(4.1, 1, s))[0]) for s in range(1000)}
    assert len(firsts) == 1000


def test_spec_validation():
    with pytest.raises(ValueError):
        OrbitSpec(4.0, 0, 0)


def test_dataset_layout():
    data = orbit_dataset(per_class=1, n_points=20, seed=5)
    assert [lab for _, lab in data] == [0, 1, 2, 3, 4]
    assert all(c.shape == (20, 2) for c, _ in data)
    again = orbit_dataset(per_class=1, n_points=20, seed=5)
    assert all(np.array_equal(a, b) for (a, _), (b, _) in zip(data, again))
    with pytest.raises(ValueError):
        orbit_dataset(r_values=())


def test_changepoint_sequence():
    seq = changepoint_sequence(2.5, 4.3, 4, 3, n_points=10, seed=1)
    assert len(seq) == 7
    first = orbit(OrbitSpec(2.5, 10, 1))
    assert np.array_equal(seq[0], first)
    assert np.array_equal(seq[4], orbit(OrbitSpec(4.3, 10, 5)))
    with pytest.raises(ValueError):
        changepoint_sequence(2.5, 4.3, 1, 3)
