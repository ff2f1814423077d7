"""Meshes, P1 fields, quadrature, and assembly helpers."""

import numpy as np
import pytest

from anisolap import (Field, FinslerNorm, FluxParams, WeightSpec, build_mesh,
                      mesh_from_tag, weighted_energy)
from anisolap.meshing import jacobi_smooth


def test_square_mesh_counts():
    mesh = build_mesh("square", 4)
    assert mesh.num_vertices == 25
    assert len(mesh.triangles) == 32
    assert np.sum(mesh.areas) == pytest.approx(1.0)
    assert np.sum(mesh.boundary) == 16


def test_rect_mesh():
    mesh = mesh_from_tag("rect:2:1:8")
    assert np.sum(mesh.areas) == pytest.approx(2.0)
    assert np.max(mesh.vertices[:, 0]) == pytest.approx(2.0)
    assert np.max(mesh.vertices[:, 1]) == pytest.approx(1.0)


def test_disk_mesh():
    mesh = mesh_from_tag("disk:16")
    # the boundary polygon is a regular 8n-gon inscribed in the unit circle
    assert np.sum(mesh.boundary) == 8 * 16
    r = np.linalg.norm(mesh.vertices[mesh.boundary], axis=1)
    assert np.allclose(r, 1.0)
    n_sides = 8 * 16
    polygon_area = 0.5 * n_sides * np.sin(2.0 * np.pi / n_sides)
    assert np.sum(mesh.areas) == pytest.approx(polygon_area, rel=1e-12)
    assert np.all(mesh.areas > 0.0)


def test_bad_mesh_tags():
    for tag in ["square", "hex:4", "rect:1:4", "disk:-2"]:
        with pytest.raises(ValueError):
            mesh_from_tag(tag)


def test_gradients_exact_for_linear_fields():
    mesh = build_mesh("square", 8)
    values = 2.0 * mesh.vertices[:, 0] - 3.0 * mesh.vertices[:, 1] + 1.0
    g = mesh.gradients(values)
    assert np.allclose(g[:, 0], 2.0, atol=1e-13)
    assert np.allclose(g[:, 1], -3.0, atol=1e-13)


def test_barycenter_values_linear():
    mesh = build_mesh("square", 8)
    values = mesh.vertices[:, 0] + mesh.vertices[:, 1]
    vbar = mesh.barycenter_values(values)
    exact = mesh.barycenters[:, 0] + mesh.barycenters[:, 1]
    assert np.allclose(vbar, exact, atol=1e-14)


def test_field_zero_boundary_enforced():
    mesh = build_mesh("square", 4)
    with pytest.raises(ValueError):
        Field(mesh, np.ones(mesh.num_vertices))
    Field(mesh, np.zeros(mesh.num_vertices))  # fine


def test_field_csv():
    mesh = build_mesh("square", 2)
    fld = Field.zeros(mesh)
    lines = fld.to_csv().strip().splitlines()
    assert lines[0] == "vertex_id,x,y,value"
    assert len(lines) == mesh.num_vertices + 1


def test_weighted_energy_dirichlet():
    # energy of the first Laplace eigenfunction: int |grad u|^2 = pi^2/2
    mesh = build_mesh("square", 64)
    fld = Field.interpolate(
        mesh, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
        zero_boundary=True)
    params = FluxParams(FinslerNorm.euclidean(), 2.0)
    e = weighted_energy(fld, params, WeightSpec.constant())
    assert e == pytest.approx(np.pi ** 2 / 2.0, abs=2e-3)


def test_weighted_energy_scaling():
    mesh = build_mesh("square", 16)
    fld = Field.interpolate(
        mesh, lambda x, y: x * (1 - x) * y * (1 - y), zero_boundary=True)
    params = FluxParams(FinslerNorm.euclidean(), 3.0)
    e1 = weighted_energy(fld, params, WeightSpec.constant())
    e2 = weighted_energy(fld.copy_with(2.0 * fld.values), params,
                         WeightSpec.constant())
    assert e2 == pytest.approx(2.0 ** 3 * e1, rel=1e-12)


def test_jacobi_smooth_preserves_boundary_and_range():
    mesh = build_mesh("square", 8)
    rng = np.random.default_rng(2)
    raw = rng.uniform(-1.0, 1.0, mesh.num_vertices)
    raw[mesh.boundary] = 0.0
    sm = jacobi_smooth(mesh, raw, passes=2)
    assert np.all(sm[mesh.boundary] == 0.0)
    assert np.max(np.abs(sm)) <= np.max(np.abs(raw)) + 1e-14
