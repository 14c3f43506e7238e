#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "qckit/mesh.hpp"
#include "qckit/quadrature.hpp"
#include "test_helpers.hpp"

using namespace qc;

TEST_CASE("uniform grid layout is lexicographic with axis 0 most significant") {
    const Mesh m = Mesh::uniform_grid(2, 3, 2.0);
    CHECK(m.size() == 9);
    CHECK(m.dim() == 2);
    CHECK(m.kind() == MeshKind::UniformGrid);
    REQUIRE(m.grid().has_value());
    CHECK(m.grid()->spacing() == doctest::Approx(1.0));
    // point (i0,i1) lives at flat index i0*3+i1 with coordinates (i0*h, i1*h)
    CHECK(m.point(0)[0] == 0.0);
    CHECK(m.point(1)[1] == 1.0);
    CHECK(m.point(3)[0] == 1.0);
    CHECK(m.point(3)[1] == 0.0);
    CHECK(m.point(8)[0] == 2.0);
    CHECK(m.point(8)[1] == 2.0);
}

TEST_CASE("grid factory rejects bad arguments") {
    CHECK_THROWS_AS(Mesh::uniform_grid(0, 4, 1.0), ConfigError);
    CHECK_THROWS_AS(Mesh::uniform_grid(2, 1, 1.0), ConfigError);
    CHECK_THROWS_AS(Mesh::uniform_grid(2, 4, 0.0), ConfigError);
}

TEST_CASE("nonuniform sampler is deterministic and respects the density") {
    const auto dense_left = [](double x, double) { return x < 0.5 ? 9.0 : 1.0; };
    const Mesh a = Mesh::nonuniform(4000, dense_left, 11);
    const Mesh b = Mesh::nonuniform(4000, dense_left, 11);
    REQUIRE(a.size() == 4000);
    CHECK(a.kind() == MeshKind::Scattered);
    CHECK(std::memcmp(a.coords().data(), b.coords().data(), a.coords().size_bytes()) == 0);

    std::int64_t left = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) {
        CHECK(a.point(i)[0] >= 0.0);
        CHECK(a.point(i)[0] <= 1.0);
        CHECK(a.point(i)[1] >= 0.0);
        CHECK(a.point(i)[1] <= 1.0);
        if (a.point(i)[0] < 0.5) ++left;
    }
    // 90/10 density split: expect ~3600 points left of 0.5
    CHECK(left > 3200);
    const Mesh c = Mesh::nonuniform(4000, dense_left, 12);
    CHECK(std::memcmp(a.coords().data(), c.coords().data(), a.coords().size_bytes()) != 0);
}

TEST_CASE("random downsample keeps a deterministic subset") {
    const Mesh m = Mesh::nonuniform(500, [](double, double) { return 1.0; }, 3);
    const Mesh d1 = m.random_downsample(120, 5);
    const Mesh d2 = m.random_downsample(120, 5);
    REQUIRE(d1.size() == 120);
    CHECK(std::memcmp(d1.coords().data(), d2.coords().data(), d1.coords().size_bytes()) == 0);

    std::set<std::pair<double, double>> parent;
    for (std::int64_t i = 0; i < m.size(); ++i) parent.insert({m.point(i)[0], m.point(i)[1]});
    for (std::int64_t i = 0; i < d1.size(); ++i)
        CHECK(parent.count({d1.point(i)[0], d1.point(i)[1]}) == 1);

    CHECK_THROWS_AS(m.random_downsample(501, 0), ConfigError);
}

TEST_CASE("gap and diameter helpers") {
    const Mesh g = Mesh::uniform_grid(2, 4, 3.0);
    CHECK(g.min_positive_gap(g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.bounding_diameter() == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("mesh round trip is bitwise and restores the grid tag") {
    qct::TempDir dir("qc-mesh");
    const Mesh g = Mesh::uniform_grid(2, 7, 1.5);
    g.save(dir / "g.qmesh");
    const Mesh r = Mesh::load(dir / "g.qmesh");
    CHECK(r.kind() == MeshKind::UniformGrid);
    REQUIRE(r.grid().has_value());
    CHECK(r.grid()->points_per_dim == 7);
    CHECK(r.grid()->extent == 1.5);
    CHECK(std::memcmp(r.coords().data(), g.coords().data(), g.coords().size_bytes()) == 0);

    r.save(dir / "g2.qmesh");
    CHECK(qct::read_file_bytes(dir / "g.qmesh") == qct::read_file_bytes(dir / "g2.qmesh"));

    const auto bytes = qct::read_file_bytes(dir / "g.qmesh");
    REQUIRE(bytes.size() >= 20);
    CHECK(std::memcmp(bytes.data(), "QCMESH01", 8) == 0);
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
    std::memcpy(&dim, bytes.data() + 8, 4);
    std::memcpy(&count, bytes.data() + 12, 8);
    CHECK(dim == 2);
    CHECK(count == 49);
    CHECK(bytes.size() == 20 + 49 * 2 * sizeof(double));
}

TEST_CASE("scattered mesh round trip stays scattered") {
    qct::TempDir dir("qc-mesh");
    const Mesh s = Mesh::nonuniform(57, [](double, double) { return 1.0; }, 9);
    s.save(dir / "s.qmesh");
    const Mesh r = Mesh::load(dir / "s.qmesh");
    CHECK(r.kind() == MeshKind::Scattered);
    CHECK(std::memcmp(r.coords().data(), s.coords().data(), s.coords().size_bytes()) == 0);
}

TEST_CASE("grid structure is recovered from raw points") {
    const Mesh g = Mesh::uniform_grid(3, 5, 2.0);
    const Mesh p = Mesh::from_points(3, std::vector<double>(g.coords().begin(), g.coords().end()));
    CHECK(p.kind() == MeshKind::UniformGrid);
    REQUIRE(p.grid().has_value());
    CHECK(p.grid()->points_per_dim == 5);

    // a single perturbed coordinate must break the lattice tag
    std::vector<double> bent(g.coords().begin(), g.coords().end());
    bent[17] += 1e-9;
    CHECK(Mesh::from_points(3, std::move(bent)).kind() == MeshKind::Scattered);
}

TEST_CASE("corrupt mesh files are rejected") {
    qct::TempDir dir("qc-mesh");
    const Mesh g = Mesh::uniform_grid(2, 3, 1.0);
    g.save(dir / "g.qmesh");
    auto bytes = qct::read_file_bytes(dir / "g.qmesh");

    {
        std::ofstream out(dir / "bad_magic.qmesh", std::ios::binary);
        auto copy = bytes;
        copy[0] = 'X';
        out.write(copy.data(), std::streamsize(copy.size()));
    }
    CHECK_THROWS_AS(Mesh::load(dir / "bad_magic.qmesh"), FormatError);

    {
        std::ofstream out(dir / "trunc.qmesh", std::ios::binary);
        out.write(bytes.data(), std::streamsize(bytes.size() - 9));
    }
    CHECK_THROWS_AS(Mesh::load(dir / "trunc.qmesh"), FormatError);
    CHECK_THROWS_AS(Mesh::load(dir / "missing.qmesh"), IoError);
}

TEST_CASE("1D composite rule weights") {
    const Mesh m = Mesh::uniform_grid(1, 5, 1.0);
    const auto w = newton_cotes_weights(m);
    const double h = 0.25;
    REQUIRE(w.size() == 5);
    CHECK(w[0] == h / 2);
    CHECK(w[1] == h);
    CHECK(w[2] == h);
    CHECK(w[3] == h);
    CHECK(w[4] == h / 2);
}

TEST_CASE("2D composite rule weights: tensor product and total volume") {
    const Mesh m = Mesh::uniform_grid(2, 6, 1.0);
    const auto w = newton_cotes_weights(m);
    const double h = 0.2;
    REQUIRE(w.size() == 36);
    CHECK(w[0] == doctest::Approx(h * h / 4).epsilon(1e-14));       // corner
    CHECK(w[1] == doctest::Approx(h * h / 2).epsilon(1e-14));       // edge
    CHECK(w[7] == doctest::Approx(h * h).epsilon(1e-14));           // interior
    CHECK(w[35] == doctest::Approx(h * h / 4).epsilon(1e-14));      // far corner
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));  // extent^2
}

TEST_CASE("3D composite rule weights integrate the volume") {
    const Mesh m = Mesh::uniform_grid(3, 4, 2.0);
    const auto w = newton_cotes_weights(m);
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(8.0).epsilon(1e-12));  // extent^3
}

TEST_CASE("composite rule weights refuse scattered meshes") {
    const Mesh s = Mesh::nonuniform(20, [](double, double) { return 1.0; }, 1);
    CHECK_THROWS_AS(newton_cotes_weights(s), UnsupportedMeshError);
}

TEST_CASE("softplus and its inverse round trip") {
    for (double y : {1e-6, 0.01, 0.5, 1.0, 7.0, 40.0, 300.0})
        CHECK(softplus(softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
    for (double x : {-40.0, -3.0, 0.0, 2.5, 50.0})
        CHECK(softplus_inverse(softplus(x)) == doctest::Approx(x).epsilon(1e-9));
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(softplus_inverse(0.0), ContractError);
    CHECK_THROWS_AS(softplus_inverse(-1.0), ContractError);
}

TEST_CASE("learned weights start at the composite rule on grids") {
    const Mesh m = Mesh::uniform_grid(2, 5, 1.0);
    const QuadratureWeights q = QuadratureWeights::learned(m, 0.0);
    const auto target = newton_cotes_weights(m);
    const auto rho = q.rho();
    REQUIRE(rho.size() == target.size());
    CHECK(qct::max_abs_diff(rho, target) < 1e-12);
    CHECK(q.learned_mode());
    CHECK_THROWS_AS(q.static_rho(), ContractError);
}

TEST_CASE("learned weights fall back to volume/N off the grid") {
    const Mesh s = Mesh::nonuniform(40, [](double, double) { return 1.0; }, 2);
    const QuadratureWeights q = QuadratureWeights::learned(s, 2.5);
    for (double v : q.rho()) CHECK(v == doctest::Approx(2.5 / 40.0).epsilon(1e-12));
    CHECK_THROWS_AS(QuadratureWeights::learned(s, 0.0), ConfigError);
}

TEST_CASE("static weights enforce positivity") {
    CHECK_THROWS_AS(QuadratureWeights::static_weights({0.5, 0.0, 0.25}), ContractError);
    CHECK_THROWS_AS(QuadratureWeights::static_weights({0.5, -1.0}), ContractError);
    const QuadratureWeights q = QuadratureWeights::static_weights({0.5, 0.25});
    CHECK_FALSE(q.learned_mode());
    CHECK_THROWS_AS(q.raw(), ContractError);
}

TEST_CASE("learned raw updates must keep the size") {
    const Mesh m = Mesh::uniform_grid(1, 4, 1.0);
    QuadratureWeights q = QuadratureWeights::learned(m, 0.0);
    CHECK_THROWS_AS(q.set_raw({1.0, 2.0}), ShapeError);
    std::vector<double> raw(4, 0.3);
    q.set_raw(raw);
    for (double v : q.rho()) CHECK(v == doctest::Approx(softplus(0.3)));
}
