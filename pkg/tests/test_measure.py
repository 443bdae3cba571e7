import math

import numpy as np
import pytest
from scipy import stats

from fmps import measure
from fmps.core import EXACT, from_product
from fmps.gates import beam_split
from fmps.grid import make_grid
from fmps.noise import LossSpec, apply_uniform_loss
from fmps.states import CatParams, cat, coherent, squeezed, vacuum


@pytest.fixture
def entangled():
    g = make_grid((-8, 8), 120)
    s = from_product([cat(CatParams(1.5, 0.2), g), squeezed(0.4, g), coherent(0.3 - 0.6j, g)])
    beam_split(s, (0, 1), 0.8, EXACT)
    beam_split(s, (1, 2), 1.9, EXACT)
    return s


def test_quadrature_pdf_of_coherent_state():
    g = make_grid((-8, 8), 200)
    pdf = measure.quadrature_pdf(from_product([coherent(1.0, g)]), 0)
    exact = np.exp(-(g.points - math.sqrt(2)) ** 2) / math.sqrt(math.pi)
    assert np.allclose(pdf.densities, exact, atol=1e-10)
    assert pdf.integral() == pytest.approx(1.0)


def test_pdfs_integrate_to_one_on_entangled_state(entangled):
    for pdf in measure.system_pdfs(entangled):
        assert pdf.integral() == pytest.approx(1.0, abs=1e-8)


def test_marginals_match_dense_state(entangled):
    amps = np.abs(entangled.to_dense()) ** 2
    w = [g.weights for g in entangled.grids]
    expected = [np.einsum("abc,b,c->a", amps, w[1], w[2]),
                np.einsum("abc,a,c->b", amps, w[0], w[2]),
                np.einsum("abc,a,b->c", amps, w[0], w[1])]
    cache = measure.EnvironmentCache(entangled)
    for i in range(3):
        assert np.allclose(measure.quadrature_pdf(entangled, i, cache).densities, expected[i],
                           atol=1e-12)
        assert np.allclose(measure.quadrature_pdf(entangled, i).densities, expected[i], atol=1e-12)


def test_photon_pmf_of_coherent_state_is_poisson():
    g = make_grid((-10, 10), 300)
    pmf = measure.photon_number_pmf(from_product([coherent(1.5, g)]), 0, 30)
    assert np.allclose(pmf.probabilities, stats.poisson.pmf(np.arange(31), 2.25), atol=1e-8)
    assert pmf.mean() == pytest.approx(2.25, abs=1e-6)


def test_photon_pmf_of_squeezed_vacuum_has_only_even_counts():
    g = make_grid((-8, 8), 200)
    pmf = measure.photon_number_pmf(from_product([squeezed(0.5, g)]), 0, 10)
    assert np.all(pmf.probabilities[1::2] < 1e-10)
    assert pmf.probabilities[0] == pytest.approx(1 / math.cosh(0.5), abs=1e-6)


def test_heterodyne_of_coherent_state():
    g = make_grid((-8, 8), 200)
    s = from_product([coherent(1.0 + 0.5j, g)])
    centre = np.array([math.sqrt(2), math.sqrt(2) * 0.5])
    pts = centre + np.array([[0.0, 0.0], [0.5, -0.3], [1.0, 1.0]])
    got = measure.heterodyne_pdf(s, 0, pts)
    expected = np.exp(-0.5 * np.sum((pts - centre) ** 2, axis=1)) / (2 * math.pi)
    assert np.allclose(got, expected, atol=1e-10)
    assert measure.heterodyne_pdf(s, 0, centre) == pytest.approx(1 / (2 * math.pi))


def test_heterodyne_integrates_to_one(entangled):
    xs = np.linspace(-7, 7, 57)
    pts = np.array([(a, b) for a in xs for b in xs])
    vals = measure.heterodyne_pdf(entangled, 2, pts)
    h = xs[1] - xs[0]
    assert vals.sum() * h * h == pytest.approx(1.0, abs=1e-3)


def test_p_quadrature_of_momentum_displaced_state():
    g = make_grid((-8, 8), 200)
    pdf = measure.p_quadrature_pdf(from_product([coherent(1j, g)]), 0)
    assert pdf.mean() == pytest.approx(math.sqrt(2), abs=1e-4)
    assert pdf.variance() == pytest.approx(0.5, abs=1e-4)


def test_ancilla_modes_cannot_be_measured():
    g = make_grid((-6, 6), 60)
    s = from_product([vacuum(g)])
    apply_uniform_loss(s, LossSpec(0.2), EXACT)
    with pytest.raises(ValueError):
        measure.quadrature_pdf(s, 1)
    with pytest.raises(ValueError):
        measure.photon_number_pmf(s, 0, -1)


def test_quadrature_distance_resamples_other_grid():
    a = measure.Pdf(make_grid((-5, 5), 101), np.exp(-make_grid((-5, 5), 101).points ** 2))
    gb = make_grid((-6, 6), 241)
    b = measure.Pdf(gb, np.exp(-gb.points ** 2))
    assert measure.quadrature_distance([a], [a]) == 0.0
    assert measure.quadrature_distance([a], [b]) < 1e-4
    with pytest.raises(ValueError):
        measure.quadrature_distance([a], [a, b])


def test_samplers_follow_distributions(rng):
    g = make_grid((-8, 8), 200)
    s = from_product([coherent(1.0, g)])
    draws = measure.sample_homodyne(measure.quadrature_pdf(s, 0), rng, 4000)
    assert draws.mean() == pytest.approx(math.sqrt(2), abs=0.05)
    counts = measure.sample_photon_number(measure.photon_number_pmf(s, 0, 20), rng, 4000)
    assert counts.mean() == pytest.approx(1.0, abs=0.08)


def test_records_are_json_friendly():
    g = make_grid((-5, 5), 20)
    s = from_product([vacuum(g)])
    rec = measure.quadrature_pdf(s, 0).to_record(3)
    assert rec["mode"] == 3 and rec["grid"]["n_points"] == 20
    assert all(isinstance(v, float) for v in rec["values"])
