#include "doctest.h"

#include "flowest/core.hpp"
#include "flowest/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace flowest;

namespace {

GridPtr unit_grid(int nx, int ny) {
    return make_uniform_grid({nx, ny}, {{0.0, 1.0}, {0.0, 1.0}});
}

VectorField constant_field(const GridPtr& g, double v) {
    VectorField f(g);
    for (int c = 0; c < f.n_components(); ++c) f.component(c).setConstant(v);
    return f;
}

VectorField random_field(const GridPtr& g, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    VectorField f(g);
    for (int c = 0; c < f.n_components(); ++c)
        for (Eigen::Index i = 0; i < f.component(c).size(); ++i) f.component(c)[i] = dist(rng);
    return f;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("grid weights are positive and sum to the domain volume") {
    const auto g = make_uniform_grid({11, 7}, {{0.0, 2.0}, {-1.0, 3.0}});
    CHECK(g->quad_weights().minCoeff() > 0.0);
    CHECK(g->quad_weights().sum() == doctest::Approx(8.0).epsilon(1e-12));

    // Nonuniform coordinates keep the identity.
    std::vector<double> x{0.0, 0.1, 0.35, 0.7, 1.0};
    std::vector<double> y{0.0, 0.5, 0.6, 2.0};
    Grid nonuni({x, y});
    CHECK(nonuni.quad_weights().sum() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("grid construction rejects bad coordinates") {
    CHECK_THROWS_WITH_AS(Grid({{0.0, 1.0}, {0.0, 0.5, 0.5}}), doctest::Contains("axis 1"),
                         std::invalid_argument);
    CHECK_THROWS_AS(Grid({{0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("inner product of the zero field vanishes") {
    const auto g = unit_grid(9, 9);
    const VectorField z(g);
    CHECK(inner_product(z, z) == 0.0);
}

TEST_CASE("inner product of the unit field equals the component count") {
    const auto g = unit_grid(17, 13);
    const VectorField one = constant_field(g, 1.0);
    CHECK(inner_product(one, one) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("inner product of sampled sines matches the closed-form integral") {
    // f = (sin(2 pi x) sin(2 pi y), 0): integral of f.f over the unit square
    // is 1/4, from int_0^1 sin^2(2 pi s) ds = 1/2 per axis.
    const auto g = unit_grid(64, 64);
    VectorField f(g);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            const double x = g->coords(0)[i], y = g->coords(1)[j];
            f.component(0)[i + 64 * j] = std::sin(2 * M_PI * x) * std::sin(2 * M_PI * y);
        }
    CHECK(inner_product(f, f) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("inner product is a symmetric bilinear form") {
    const auto g = unit_grid(12, 10);
    std::mt19937_64 rng(42);
    const VectorField a = random_field(g, rng);
    const VectorField b = random_field(g, rng);
    const VectorField c = random_field(g, rng);

    CHECK(inner_product(a, b) == doctest::Approx(inner_product(b, a)).epsilon(1e-14));

    const double alpha = 1.7, beta = -0.4;
    VectorField combo = a;
    combo *= alpha;
    combo.axpy(beta, b);
    const double lhs = inner_product(combo, c);
    const double rhs = alpha * inner_product(a, c) + beta * inner_product(b, c);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("trapezoidal quadrature is exact on linear fields") {
    const auto g = make_uniform_grid({9, 6}, {{0.0, 2.0}, {0.0, 1.0}});
    VectorField lin(g);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 6; ++j)
            lin.component(0)[i + 9 * j] = 3.0 * g->coords(0)[i] - 1.0;
    const VectorField one = constant_field(g, 1.0);
    // integral of (3x - 1) over [0,2]x[0,1] = 4.
    CHECK(inner_product(lin, one) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("inner product rejects mismatched grids with a diagnostic") {
    const VectorField a(unit_grid(8, 8));
    const VectorField b(unit_grid(8, 9));
    CHECK_THROWS_WITH_AS(inner_product(a, b), doctest::Contains("grid mismatch"),
                         std::invalid_argument);
}

TEST_CASE("axis derivatives are exact on quadratics, including boundaries") {
    std::vector<double> x{0.0, 0.15, 0.4, 0.55, 0.9, 1.0};
    std::vector<double> y{0.0, 0.3, 0.7, 1.0};
    const auto g = std::make_shared<Grid>(std::vector<std::vector<double>>{x, y});
    VectorXd v(g->n_points());
    std::vector<int> idx(2, 0);
    for (std::size_t p = 0; p < g->n_points(); ++p) {
        const double xx = x[idx[0]];
        v[static_cast<Eigen::Index>(p)] = 2.0 * xx * xx - 0.7 * xx + 0.3;
        if (++idx[0] == 6) {
            idx[0] = 0;
            ++idx[1];
        }
    }
    const VectorXd d = derivative_along_axis(*g, v, 0);
    idx = {0, 0};
    for (std::size_t p = 0; p < g->n_points(); ++p) {
        const double xx = x[idx[0]];
        CHECK(d[static_cast<Eigen::Index>(p)] == doctest::Approx(4.0 * xx - 0.7).epsilon(1e-10));
        if (++idx[0] == 6) {
            idx[0] = 0;
            ++idx[1];
        }
    }
}

TEST_CASE("snapshot save/load round trip is exact in both formats") {
    const auto g = unit_grid(6, 5);
    std::mt19937_64 rng(7);
    std::vector<VectorField> fields;
    for (int i = 0; i < 3; ++i) fields.push_back(random_field(g, rng));
    VectorXd times(3);
    times << 0.0, 0.4, 1.1;
    const SnapshotSet set(times, fields);

    for (const auto format : {FileFormat::TextTable, FileFormat::RawBinary}) {
        const std::string path = temp_path("flowest_roundtrip");
        save_snapshots(set, path, format);
        const SnapshotSet back = load_snapshots(path, format);
        REQUIRE(back.n_snapshots() == 3);
        CHECK((back.times() - set.times()).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < 3; ++i)
            for (int c = 0; c < 2; ++c)
                CHECK((back.field(i).component(c) - set.field(i).component(c))
                          .cwiseAbs()
                          .maxCoeff() == 0.0);
        CHECK((back.reference().component(0) - set.reference().component(0))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        std::filesystem::remove(path);
    }
}

TEST_CASE("load computes the time mean when the file has no reference") {
    const auto g = unit_grid(5, 5);
    std::vector<VectorField> fields;
    for (double v : {1.0, 2.0, 3.0, 4.0}) fields.push_back(constant_field(g, v));
    VectorXd times(4);
    times << 0, 1, 2, 3;
    const SnapshotSet set(times, fields, constant_field(g, -99.0));  // decoy reference

    const std::string path = temp_path("flowest_nomean");
    save_snapshots(set, path, FileFormat::TextTable, /*with_reference=*/false);
    const SnapshotSet back = load_snapshots(path);
    CHECK(back.reference().component(0)[0] == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(back.reference().component(1)[3] == doctest::Approx(2.5).epsilon(1e-15));
    std::filesystem::remove(path);
}

TEST_CASE("supplied reference is passed through unchanged") {
    const auto g = unit_grid(4, 4);
    std::vector<VectorField> fields{constant_field(g, 1.0), constant_field(g, 2.0),
                                    constant_field(g, 5.0)};
    VectorXd times(3);
    times << 0, 1, 2;
    const SnapshotSet set(times, fields, constant_field(g, 7.0));
    const std::string path = temp_path("flowest_withmean");
    save_snapshots(set, path, FileFormat::RawBinary);
    CHECK(load_snapshots(path).reference().component(0)[0] == 7.0);
    std::filesystem::remove(path);
}

TEST_CASE("saving to an unwritable location names the path") {
    const auto g = unit_grid(4, 4);
    const SnapshotSet set((VectorXd(2) << 0, 1).finished(),
                          {constant_field(g, 1.0), constant_field(g, 2.0)});
    CHECK_THROWS_WITH_AS(save_snapshots(set, "/nonexistent_dir/no.bin", FileFormat::RawBinary),
                         doctest::Contains("/nonexistent_dir"), IoError);
}

TEST_CASE("malformed snapshot files are rejected with positions") {
    const std::string path = temp_path("flowest_bad");
    write_text_file(path,
                    "flowsnap-text 1 2 4 4 2 2 1\n0 0.5 0.6 1\n0 0.2 0.8 1\n0 1\nnot_a_number\n");
    CHECK_THROWS_WITH_AS(load_snapshots(path, FileFormat::TextTable), doctest::Contains("line"),
                         IoError);

    write_text_file(path, "flowsnap-text 1 2 3 3 2 2 0\n0 .5 1\n0 .5 1\n1 1\n");
    CHECK_THROWS_WITH_AS(load_snapshots(path, FileFormat::TextTable),
                         doctest::Contains("times"), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("time interpolation between snapshots is linear and bounded") {
    const auto g = unit_grid(4, 4);
    std::vector<VectorField> fields{constant_field(g, 1.0), constant_field(g, 3.0)};
    const SnapshotSet set((VectorXd(2) << 0, 1).finished(), fields);
    CHECK(set.at_time(0.5).component(0)[0] == doctest::Approx(2.0));
    CHECK_THROWS_AS(set.at_time(1.5), std::invalid_argument);
}
