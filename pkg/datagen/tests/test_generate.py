import json

import numpy as np
import pytest

from cantera_datagen import ReactorGridSpec, generate_h2_grid, mixture_from_phi
from cantera_datagen import mechanism as mech
from cantera_datagen.reactor import run_reactor

from chemkan import data as chemdata

SMALL = ReactorGridSpec(temperatures=(950.0, 1150.0, 1200.0),
                        equivalence_ratios=(0.7, 1.3), n_samples=40)


@pytest.fixture(scope="module")
def grid_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("h2")
    manifest = generate_h2_grid(SMALL, path)
    return path, manifest


class TestMixture:
    def test_stoichiometric_mole_ratio(self):
        # phi = 1 off-grid special case: H2:O2 = 2:1 in moles
        Y = mixture_from_phi(1.0)
        moles = Y / mech.MOLAR_MASSES
        assert moles[0] / moles[3] == pytest.approx(2.0, rel=1e-12)

    def test_lean_and_rich(self):
        lean = mixture_from_phi(0.7)
        rich = mixture_from_phi(1.5)
        m_lean = lean / mech.MOLAR_MASSES
        m_rich = rich / mech.MOLAR_MASSES
        assert m_lean[0] / m_lean[3] == pytest.approx(1.4, rel=1e-12)
        assert m_rich[0] / m_rich[3] == pytest.approx(3.0, rel=1e-12)

    def test_rejects_nonpositive_phi(self):
        with pytest.raises(ValueError):
            mixture_from_phi(0.0)


class TestReactor:
    def test_cold_lean_case_does_not_ignite(self):
        times, states = run_reactor(950.0, 0.7, 6e-4, 30)
        assert states[-1, -1] - states[0, -1] < 50.0

    def test_hot_case_ignites(self):
        times, states = run_reactor(1200.0, 1.1, 6e-4, 30)
        assert states[-1, -1] > 2000.0

    def test_mass_fractions_sum_to_one(self):
        _, states = run_reactor(1100.0, 0.9, 6e-4, 30)
        assert np.abs(states[:, :-1].sum(axis=1) - 1.0).max() < 1e-6

    def test_elemental_mass_fractions_constant(self):
        _, states = run_reactor(1150.0, 1.5, 6e-4, 50)
        coeff = chemdata.H2_ELEMENT_MATRIX.conservation_coefficients()
        Z = states[:, :-1] @ coeff.T  # (n_t, n_elements)
        assert np.abs(Z - Z[0]).max() < 1e-8


class TestGrid:
    def test_manifest_passes_primary_ingest(self, grid_dir):
        _, manifest = grid_dir
        ds = chemdata.ingest_trajectories(manifest, schema=chemdata.H2_SPECIES)
        assert len(ds.trajectories) == 6
        assert ds.units == "mass_fraction"
        for tr in ds.trajectories:
            assert tr.states.shape == (40, 10)

    def test_withheld_case_flagged(self, grid_dir):
        _, manifest = grid_dir
        doc = json.loads(open(manifest).read())
        flags = {(e["T0"], e["phi"]): e["withheld"] for e in doc["files"]}
        assert flags[(1150.0, 1.3)] is True
        assert sum(flags.values()) == 1

    def test_species_ordering_matches_primary(self, grid_dir):
        _, manifest = grid_dir
        doc = json.loads(open(manifest).read())
        assert tuple(doc["species"]) == chemdata.H2_SPECIES

    def test_cantera_mechanism_fails_informatively(self, tmp_path):
        spec = ReactorGridSpec(mechanism="cantera:gri30.yaml")
        with pytest.raises((RuntimeError, NotImplementedError),
                           match="cantera"):
            generate_h2_grid(spec, tmp_path)

    def test_unknown_mechanism_rejected(self, tmp_path):
        spec = ReactorGridSpec(mechanism="flamelet")
        with pytest.raises(ValueError):
            generate_h2_grid(spec, tmp_path)
