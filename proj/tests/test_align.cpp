#include <doctest.h>

#include <cmath>

#include "geoflow/align.hpp"
#include "test_helpers.hpp"

using namespace geoflow;
using geoflow::testing::random_matrix;
using geoflow::testing::random_spd;

TEST_CASE("nca_fit computes mean and sample standard deviation") {
    Matrix healthy(3, 2);
    healthy << 1, 10, 2, 20, 3, 30;
    const NcaTransform t = nca_fit(healthy);
    CHECK(t.mean(0) == doctest::Approx(2.0));
    CHECK(t.mean(1) == doctest::Approx(20.0));
    CHECK(t.scale(0) == doctest::Approx(1.0)); // sample std, M-1 denominator
    CHECK(t.scale(1) == doctest::Approx(10.0));

    const Matrix z = nca_apply(t, healthy);
    CHECK(z.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    for (int j = 0; j < 2; ++j) {
        const double var = z.col(j).squaredNorm() / 2.0;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("nca_fit rejects constant features and tiny samples") {
    Matrix degenerate(3, 2);
    degenerate << 1, 5, 2, 5, 3, 5;
    CHECK_THROWS_AS(nca_fit(degenerate), degenerate_feature_error);
    try {
        nca_fit(degenerate);
    } catch (const degenerate_feature_error& e) {
        CHECK(e.feature_index == 1);
    }
    CHECK_THROWS_AS(nca_fit(Matrix::Ones(1, 2)), input_error);
}

TEST_CASE("nca_apply is affine and checks dimensions") {
    Matrix healthy(4, 2);
    healthy << 0, 0, 2, 4, 4, 8, 6, 12;
    const NcaTransform t = nca_fit(healthy);
    Matrix probe(1, 2);
    probe << 3, 6;
    const Matrix z = nca_apply(t, probe);
    CHECK(z(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(nca_apply(t, Matrix::Zero(1, 3)), dimension_error);
}

TEST_CASE("wrms_normalise matches a hand computation") {
    Matrix frfs(2, 2);
    frfs << 3, 4, 6, 8; // row RMS: sqrt(12.5), sqrt(50); ref RMS over all 4
    const double rms0 = std::sqrt(12.5);
    const double rms1 = std::sqrt(50.0);
    const double rms_ref = std::sqrt((9.0 + 16.0 + 36.0 + 64.0) / 4.0);

    WrmsConfig cfg;
    cfg.mix = 0.4;
    cfg.epsilon = 0.0;
    const Matrix out = wrms_normalise(cfg, frfs);
    const double den0 = 0.4 * rms0 + 0.6 * rms_ref;
    const double den1 = 0.4 * rms1 + 0.6 * rms_ref;
    CHECK(out(0, 0) == doctest::Approx(3.0 / den0).epsilon(1e-12));
    CHECK(out(0, 1) == doctest::Approx(4.0 / den0).epsilon(1e-12));
    CHECK(out(1, 0) == doctest::Approx(6.0 / den1).epsilon(1e-12));
    CHECK(out(1, 1) == doctest::Approx(8.0 / den1).epsilon(1e-12));
}

TEST_CASE("wrms_normalise with mix=1 makes every row unit RMS") {
    Rng rng(61);
    Matrix frfs = random_matrix(10, 6, rng).cwiseAbs();
    const Matrix out = wrms_normalise(WrmsConfig{1.0, 0.0}, frfs);
    for (int i = 0; i < 10; ++i) {
        const double rms = std::sqrt(out.row(i).array().square().mean());
        CHECK(rms == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("wrms_normalise with mix=0 is a single global rescale") {
    Rng rng(67);
    Matrix frfs = random_matrix(8, 5, rng).cwiseAbs();
    const double rms_ref = std::sqrt(frfs.array().square().mean());
    const Matrix out = wrms_normalise(WrmsConfig{0.0, 0.0}, frfs);
    CHECK((out - frfs / rms_ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("wrms_normalise rejects bad input") {
    CHECK_THROWS_AS(wrms_normalise(WrmsConfig{}, Matrix(0, 3)), input_error);
    Matrix neg(1, 2);
    neg << 1, -1;
    CHECK_THROWS_AS(wrms_normalise(WrmsConfig{}, neg), input_error);
}

TEST_CASE("select_mix returns the smallest stable grid point") {
    // Strongly anisotropic data: the leading direction is stable under
    // bootstrap for every mix, so the scan should stop at 0.00.
    Rng data_rng(71);
    Matrix frfs(40, 4);
    for (int i = 0; i < 40; ++i) {
        const double along = 10.0 + data_rng.normal();
        frfs(i, 0) = along;
        frfs(i, 1) = 0.01 * std::abs(data_rng.normal());
        frfs(i, 2) = 0.01 * std::abs(data_rng.normal());
        frfs(i, 3) = 0.01 * std::abs(data_rng.normal());
    }
    Rng rng(73);
    CHECK(select_mix(frfs, 0.9, rng) == doctest::Approx(0.0));
}

TEST_CASE("select_mix fails with an unattainable threshold") {
    Rng data_rng(79);
    Matrix frfs = random_matrix(12, 4, data_rng).cwiseAbs();
    Rng rng(83);
    CHECK_THROWS_AS(select_mix(frfs, 1.1, rng), selection_failure_error);
    Rng rng2(83);
    try {
        select_mix(frfs, 1.1, rng2);
    } catch (const selection_failure_error& e) {
        CHECK(e.best_cosine <= 1.0 + 1e-12);
        CHECK(e.best_cosine > 0.0);
    }
    CHECK_THROWS_AS(select_mix(Matrix::Ones(4, 2), 0.5, rng), input_error);
}

TEST_CASE("select_mix is deterministic for a fixed generator seed") {
    Rng data_rng(89);
    Matrix frfs = random_matrix(30, 5, data_rng).cwiseAbs();
    Rng a(97), b(97);
    CHECK(select_mix(frfs, 0.5, a) == select_mix(frfs, 0.5, b));
}

TEST_CASE("alignment_curve geometry on a three-domain rotation") {
    // Domains concentrated along x, then rotated by 0.3 and 0.6 radians.
    Rng rng(101);
    auto make_domain = [&](double angle) {
        Matrix d(50, 2);
        for (int i = 0; i < 50; ++i) {
            const double along = 5.0 * rng.normal();
            const double across = 0.01 * rng.normal();
            d(i, 0) = along * std::cos(angle) - across * std::sin(angle);
            d(i, 1) = along * std::sin(angle) + across * std::cos(angle);
        }
        return d;
    };
    const std::vector<Matrix> chain = {make_domain(0.0), make_domain(0.3),
                                       make_domain(0.6)};
    const AlignmentCurves curves = alignment_curve(chain, 1);
    REQUIRE(curves.source_target.size() == 2);
    REQUIRE(curves.source_origin.size() == 2);
    CHECK(curves.source_target[0] == doctest::Approx(std::cos(0.3)).epsilon(1e-3));
    CHECK(curves.source_target[1] == doctest::Approx(std::cos(0.3)).epsilon(1e-3));
    CHECK(curves.source_origin[0] == doctest::Approx(std::cos(0.3)).epsilon(1e-3));
    CHECK(curves.source_origin[1] == doctest::Approx(std::cos(0.6)).epsilon(1e-3));
    // first points of the two curves coincide by construction
    CHECK(curves.source_target[0] == doctest::Approx(curves.source_origin[0]));

    CHECK_THROWS_AS(alignment_curve({chain[0]}, 1), input_error);
}

TEST_CASE("gaussian_w2 closed-form identities") {
    const Matrix eye = Matrix::Identity(2, 2);
    Vector mu0 = Vector::Zero(2);
    Vector mu1(2);
    mu1 << 3, 4;

    CHECK(gaussian_w2(mu0, eye, mu0, eye) == doctest::Approx(0.0));
    CHECK(gaussian_w2(mu0, eye, mu1, eye) == doctest::Approx(5.0).epsilon(1e-10));

    // 1-D case: W2^2 = (mu difference)^2 + (sigma difference)^2
    Vector a(1), b(1);
    a << 1.0;
    b << 4.0;
    Matrix ca(1, 1), cb(1, 1);
    ca << 4.0; // sigma 2
    cb << 9.0; // sigma 3
    CHECK(gaussian_w2(a, ca, b, cb) ==
          doctest::Approx(std::sqrt(9.0 + 1.0)).epsilon(1e-10));

    // symmetric in its arguments
    Rng rng(103);
    const Matrix c1 = random_spd(3, rng);
    const Matrix c2 = random_spd(3, rng);
    Vector m1 = random_matrix(3, 1, rng);
    Vector m2 = random_matrix(3, 1, rng);
    CHECK(gaussian_w2(m1, c1, m2, c2) ==
          doctest::Approx(gaussian_w2(m2, c2, m1, c1)).epsilon(1e-9));
}

TEST_CASE("gaussian_w2 rejects malformed covariances") {
    const Matrix eye = Matrix::Identity(2, 2);
    Vector mu = Vector::Zero(2);
    Matrix asym(2, 2);
    asym << 1, 0.5, -0.5, 1;
    CHECK_THROWS_AS(gaussian_w2(mu, asym, mu, eye), input_error);
    Matrix indef(2, 2);
    indef << 1, 0, 0, -1;
    CHECK_THROWS_AS(gaussian_w2(mu, indef, mu, eye), input_error);
    CHECK_THROWS_AS(gaussian_w2(Vector::Zero(3), Matrix::Identity(3, 3), mu, eye),
                    dimension_error);
}

TEST_CASE("path_length sums hops and satisfies the triangle inequality") {
    Rng rng(107);
    std::vector<Matrix> chain;
    for (int k = 0; k < 4; ++k) {
        Matrix d = random_matrix(60, 3, rng);
        d.rowwise() += Eigen::RowVector3d(2.0 * k, -k, 0.5 * k);
        chain.push_back(d);
    }
    const PathLengthReport report = path_length(chain);
    REQUIRE(report.hop_distances.size() == 3);
    double sum = 0.0;
    for (double h : report.hop_distances) {
        CHECK(h >= 0.0);
        sum += h;
    }
    CHECK(report.total == doctest::Approx(sum).epsilon(1e-12));
    CHECK(report.total >= report.direct - 1e-9);

    CHECK_THROWS_AS(path_length({chain[0]}), input_error);
}
