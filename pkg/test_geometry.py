"""
Tests for coil stacks, disc meshing and placements.
"""

import warnings

import numpy as np
import pytest

from errors import GeometryError, GeometryWarning
from geometry import (CoilSystem, Filament, Pose, build_solenoid, element_positions, mesh_disc,
                      mesh_to_frame, placement_arrays, relative_placement, rotation_matrix)


class TestMesh:
    def test_three_by_three_center_inside(self):
        mesh = mesh_disc(1e-3, 3)
        assert mesh.n == 9
        assert mesh.R_e == pytest.approx(1e-3 / 3)

    def test_three_by_three_fully_inside(self):
        mesh = mesh_disc(1e-3, 3, rule="fully-inside")
        assert mesh.n == 5
        assert set(map(tuple, mesh.lattice.tolist())) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}

    def test_full_fidelity_element_count(self):
        mesh = mesh_disc(1.55e-3, 71)
        assert mesh.n == pytest.approx(3993, rel=0.03)

    def test_default_thickness_ratio(self):
        mesh = mesh_disc(1e-3, 5)
        assert mesh.th == pytest.approx(0.2 * mesh.R_e)
        assert mesh.eps == pytest.approx(0.1)

    def test_default_thickness_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", GeometryWarning)
            for grid_n in (5, 9, 31):
                mesh_disc(1.4e-3, grid_n)

    def test_centres_row_major_and_symmetric(self):
        mesh = mesh_disc(1e-3, 5)
        rows = mesh.grid_index[:, 0]
        assert np.all(np.diff(rows) >= 0)
        np.testing.assert_allclose(mesh.centers.sum(axis=0), 0.0, atol=1e-18)
        # first row lies at +X2
        assert mesh.centers[0, 1] > 0

    def test_lattice_matches_centres(self):
        mesh = mesh_disc(2e-3, 7)
        np.testing.assert_allclose(mesh.centers, 2.0 * mesh.R_e * mesh.lattice, rtol=1e-15)

    @pytest.mark.parametrize("grid_n", [4, 1, 2.5])
    def test_invalid_grid(self, grid_n):
        with pytest.raises(GeometryError):
            mesh_disc(1e-3, grid_n)

    def test_invalid_rule(self):
        with pytest.raises(GeometryError):
            mesh_disc(1e-3, 5, rule="corner-inside")

    def test_export_columns(self):
        frame = mesh_to_frame(mesh_disc(1e-3, 3))
        assert list(frame.columns) == ["s", "x1_m", "x2_m", "row", "col"]
        assert frame["s"].tolist() == list(range(1, 10))


class TestCoils:
    def test_solenoid_stack(self):
        stack = build_solenoid(2e-3, 20, 25e-6)
        assert len(stack) == 20
        assert stack[0].position[2] == 0.0
        assert stack[-1].position[2] == pytest.approx(-19 * 25e-6)
        assert all(f.radius == 1e-3 for f in stack)

    def test_coil_system_weights(self, two_coils):
        assert two_coils.N == 2
        assert two_coils.R_c1 == 1e-3
        np.testing.assert_allclose(two_coils.radius_weights(), [1.0, np.sqrt(1.9)])
        np.testing.assert_array_equal(two_coils.currents, [1.0, -1.0])

    def test_from_stacks_keeps_order(self):
        coils = CoilSystem.from_stacks(build_solenoid(2e-3, 2, 1e-5), build_solenoid(4e-3, 1, 0.0, current=-1))
        assert coils.radii.tolist() == [1e-3, 1e-3, 2e-3]

    def test_tilted_filament_rejected(self):
        with pytest.raises(GeometryError):
            Filament(radius=1e-3, orientation=(0.1, 0.0, 0.0))

    @pytest.mark.parametrize("kwargs", [dict(diameter=-1.0, windings=1, pitch=0.0),
                                        dict(diameter=1e-3, windings=0, pitch=0.0),
                                        dict(diameter=1e-3, windings=2, pitch=-1e-6)])
    def test_invalid_solenoid(self, kwargs):
        with pytest.raises(GeometryError):
            build_solenoid(**kwargs)

    def test_empty_system(self):
        with pytest.raises(GeometryError):
            CoilSystem(())


class TestPlacement:
    def test_pose_at_lambda(self):
        pose = Pose.at_lambda(200e-6, 100e-6, -0.5)
        assert pose.q == pytest.approx((0.0, 0.0, 150e-6))

    def test_rotation_rejected(self):
        with pytest.raises(GeometryError):
            Pose((0.0, 0.0, 1e-4), (0.0, 0.01, 0.0))

    def test_rotation_matrix_orthonormal(self):
        R = rotation_matrix((0.1, -0.2, 0.3))
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-15)

    def test_relative_placement_units(self):
        filament = Filament(radius=1e-3, position=(0.0, 0.0, -25e-6))
        p = relative_placement((2e-4, 0.0), filament, Pose.levitated(100e-6), R_e=1e-4)
        assert p.x1 == pytest.approx(2.0)
        assert p.x3 == pytest.approx(1.25)
        assert p.nu == pytest.approx(0.1)

    def test_placement_arrays_consistent(self, small_mesh, two_coils):
        pose = Pose.levitated(200e-6)
        lateral, x3, nu = placement_arrays(small_mesh, two_coils, element_positions(small_mesh, pose.q))
        assert lateral.shape == (small_mesh.n, 2)
        s = 3
        p = relative_placement(small_mesh.centers[s], two_coils.filaments[1], pose, small_mesh.R_e)
        assert lateral[s, 1] == pytest.approx(p.lateral, rel=1e-14)
        assert x3[s, 1] == pytest.approx(p.x3, rel=1e-14)
        assert nu[1] == pytest.approx(p.nu, rel=1e-14)

    def test_rotated_positions_keep_distance(self, small_mesh):
        positions = element_positions(small_mesh, (0.0, 0.0, 0.0), (0.0, 0.0, 0.4))
        np.testing.assert_allclose(np.linalg.norm(positions, axis=1),
                                   np.linalg.norm(small_mesh.centers, axis=1), rtol=1e-12, atol=1e-18)
