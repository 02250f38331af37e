import math

import numpy as np
import pytest

from kleinwalk.errors import ConfigError, DomainError, RangeError, UnsupportedGroupError
from kleinwalk.groups import (
    GroupSpec,
    SphericalCap,
    Word,
    enumerate_orbit,
    inverse_index,
    load_group_file,
    load_preset,
    ping_pong_check,
    predicted_orbit_size,
    reduce_letters,
    word_length,
)
from kleinwalk.moebius import MoebiusMap


class TestPresets:
    def test_gamma2_generators(self, gamma2):
        assert len(gamma2.generators) == 4
        assert gamma2.generator_kinds() == ("parabolic",) * 4
        assert gamma2.ambient_dim == 2

    def test_schottky2_all_loxodromic(self, schottky2):
        assert schottky2.generator_kinds() == ("loxodromic",) * 4

    def test_kleinian_pp_mix(self, kleinian_pp):
        kinds = kleinian_pp.generator_kinds()
        assert kinds[:2] == ("parabolic", "parabolic")
        assert kinds[2:] == ("loxodromic", "loxodromic")
        assert kleinian_pp.ambient_dim == 3

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="catalog"):
            load_preset("nosuch")

    def test_inverse_pairing_convention(self, gamma2):
        for i, g in enumerate(gamma2.generators):
            assert g.compose(gamma2.generators[inverse_index(i)]).is_identity(1e-12)

    def test_elliptic_generator_rejected(self):
        rot = MoebiusMap(0, 1, -1, 0)
        with pytest.raises(ConfigError, match="elliptic"):
            GroupSpec("bad", (rot, rot.inverse()), ambient_dim=2)

    def test_unpaired_generators_rejected(self):
        a = MoebiusMap(1, 2, 0, 1)
        b = MoebiusMap(1, 0, 2, 1)
        with pytest.raises(ConfigError, match="inverse"):
            GroupSpec("bad", (a, b), ambient_dim=2)


class TestPingPong:
    def test_all_presets_pass(self, gamma2, schottky2, kleinian_pp):
        for spec in (gamma2, schottky2, kleinian_pp):
            report = ping_pong_check(spec, 1000)
            assert report.passed
            assert report.worst_margin() > 1e-3

    def test_shrunk_disks_fail(self, gamma2):
        import dataclasses

        shrunk = dataclasses.replace(
            gamma2, ping_pong_disks=tuple(c.scaled(0.5) for c in gamma2.ping_pong_disks)
        )
        assert not ping_pong_check(shrunk, 1000).passed

    def test_missing_disks(self, gamma2):
        import dataclasses

        bare = dataclasses.replace(gamma2, is_free_ping_pong=False, ping_pong_disks=None)
        with pytest.raises(ConfigError, match="caps"):
            ping_pong_check(bare, 1000)

    def test_grid_size_floor(self, gamma2):
        with pytest.raises(DomainError):
            ping_pong_check(gamma2, 999)

    def test_cap_membership(self):
        cap = SphericalCap.from_chart_disk(0.5 + 0j, 0.5)
        inside = np.array([2 * 0.5, 0, 0.25 - 1]) / 1.25  # chart z = 0.5
        assert cap.contains(inside / np.linalg.norm(inside))
        assert not cap.contains(np.array([0.0, 0.0, 1.0]), tol=1e-9)


class TestWords:
    def test_empty_word(self, gamma2):
        assert word_length(gamma2, Word(())) == 0

    def test_adjacent_cancellation(self, gamma2):
        assert word_length(gamma2, Word((0, 1, 2))) == 1

    def test_reduced_word_keeps_length(self, gamma2):
        assert word_length(gamma2, Word((0, 2, 1, 3))) == 4

    def test_nested_cancellation(self):
        assert reduce_letters((0, 2, 3, 1)) == ()

    def test_inverse_word(self):
        w = Word((0, 2, 0))
        assert w.inverse().letters == (1, 3, 1)

    def test_left_invariance_of_word_metric(self, gamma2):
        rng = np.random.default_rng(21)
        for _ in range(100):
            g = Word(tuple(rng.integers(0, 4, size=rng.integers(0, 8))))
            h = Word(tuple(rng.integers(0, 4, size=rng.integers(0, 8))))
            d1 = word_length(gamma2, g.inverse().concat(h))
            d2 = len(Word(reduce_letters(g.inverse().letters + h.letters), True))
            assert d1 == d2

    def test_non_free_unsupported(self, gamma2):
        import dataclasses

        bare = dataclasses.replace(gamma2, is_free_ping_pong=False, ping_pong_disks=None)
        with pytest.raises(UnsupportedGroupError):
            word_length(bare, Word((0,)))


class TestOrbitEnumeration:
    def test_ball_counts(self, gamma2):
        assert len(enumerate_orbit(gamma2, 1)) == 5
        assert len(enumerate_orbit(gamma2, 3)) == 53
        assert predicted_orbit_size(2, 3) == 53

    def test_parabolic_square_entry(self, gamma2):
        tab = enumerate_orbit(gamma2, 3)
        target = MoebiusMap(1, 4, 0, 1)
        hits = [
            i for i in range(len(tab))
            if tab.length[i] == 2 and tab.matrix(i).approx_eq(target, 1e-9)
        ]
        assert len(hits) == 1
        assert abs(tab.radii[hits[0]] - 2 * math.asinh(2)) <= 1e-9

    def test_memory_guard_names_safe_depth(self, gamma2):
        with pytest.raises(RangeError, match="depth"):
            enumerate_orbit(gamma2, 20, cap=10_000)

    def test_deterministic_order(self, gamma2):
        t1 = enumerate_orbit(gamma2, 6)
        t2 = enumerate_orbit(gamma2, 6)
        assert np.array_equal(t1.radii, t2.radii)
        assert np.array_equal(t1.parent, t2.parent)
        assert np.array_equal(t1.letter, t2.letter)

    def test_injectivity_at_depth_seven(self, gamma2, schottky2, kleinian_pp):
        for spec in (gamma2, schottky2, kleinian_pp):
            tab = enumerate_orbit(spec, 7)
            mats = tab.matrices()
            keys = np.round(np.concatenate([mats.real, mats.imag], axis=1), 6)
            assert len(np.unique(keys, axis=0)) == len(tab)

    def test_word_matrix_round_trip(self, schottky2):
        tab = enumerate_orbit(schottky2, 4)
        rng = np.random.default_rng(3)
        for i in rng.integers(0, len(tab), size=20):
            w, m, r = tab.entry(int(i))
            assert m.approx_eq(schottky2.word_matrix(w), 1e-9)
            assert len(w) == tab.length[i]

    def test_matrices_regeneration_matches(self, gamma2):
        tab = enumerate_orbit(gamma2, 5)
        mats = tab.matrices()
        for i in (0, 1, 17, len(tab) - 1):
            m = tab.matrix(i)
            assert np.allclose(mats[i], [m.a, m.b, m.c, m.d], atol=1e-9)

    def test_reliable_radius_is_minimal_power(self, gamma2, schottky2):
        tab = enumerate_orbit(gamma2, 8)
        assert abs(tab.reliable_radius() - 2 * math.asinh(8)) <= 1e-9
        tab2 = enumerate_orbit(schottky2, 4)
        assert abs(tab2.reliable_radius() - 16.0) <= 1e-9

    def test_skirt_counts_are_complete(self, gamma2):
        shallow = enumerate_orbit(gamma2, 8)
        deep = enumerate_orbit(gamma2, 10)
        rmax = shallow.reliable_radius()
        for r in np.linspace(0.2, 1.0, 9) * rmax:
            n1 = np.searchsorted(shallow.sorted_radii(), r, side="right")
            n2 = np.searchsorted(deep.sorted_radii(), r, side="right")
            assert n1 == n2

    def test_triangle_coupling(self, kleinian_pp):
        tab = enumerate_orbit(kleinian_pp, 6)
        C = max(kleinian_pp.generator_displacements())
        assert np.all(tab.radii <= C * tab.length + 1e-9)


class TestGroupFile(object):
    def test_round_trip(self, tmp_path):
        ch, sh = math.cosh(2), math.sinh(2)
        coth = ch / sh
        rho = 1.15 / sh
        text = "\n".join([
            "name = myschottky",
            "ambient = 2",
            "free = true",
            f"gen = {ch!r}, {sh!r}, {sh!r}, {ch!r}",
            f"gen = {ch + 4 * sh!r}, {-15 * sh!r}, {sh!r}, {ch - 4 * sh!r}",
            f"cap = disk, {coth!r}, 0, {rho!r}",
            f"cap = disk, {-coth!r}, 0, {rho!r}",
            f"cap = disk, {4 + coth!r}, 0, {rho!r}",
            f"cap = disk, {4 - coth!r}, 0, {rho!r}",
        ])
        path = tmp_path / "group.txt"
        path.write_text(text, encoding="utf-8")
        spec = load_group_file(path)
        assert spec.name == "myschottky"
        assert spec.is_free_ping_pong
        assert len(spec.generators) == 4
        assert len(enumerate_orbit(spec, 2)) == 17

    def test_complex_entries(self, tmp_path):
        path = tmp_path / "group.txt"
        path.write_text("gen = 0+2i, 1, -1, 0+0.0i\n", encoding="utf-8")
        spec = load_group_file(path)
        assert spec.generators[0].c != 0

    def test_error_names_line(self, tmp_path):
        path = tmp_path / "group.txt"
        path.write_text("name = x\nbogus = 1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match=":2"):
            load_group_file(path)

    def test_free_requires_caps(self, tmp_path):
        path = tmp_path / "group.txt"
        path.write_text("free = true\ngen = 1, 2, 0, 1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="caps"):
            load_group_file(path)
