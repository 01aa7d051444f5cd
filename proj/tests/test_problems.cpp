#include "support.hpp"

#include "flexamg/error.hpp"
#include "flexamg/problems.hpp"

#include <doctest.h>

#include <array>
#include <limits>

using namespace flexamg;
using namespace testsupport;

TEST_CASE("poisson stencil examples") {
    const SparseMatrix one = build_anisotropic_poisson({1, 1, 1, 1});
    REQUIRE(one.nrows() == 1);
    CHECK(one.at(0, 0) == 6.0);

    const SparseMatrix two = build_anisotropic_poisson({1, 1, 1, 2});
    REQUIRE(two.nrows() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(two.at(i, i) == 6.0);
        CHECK(two.row_end(i) - two.row_begin(i) == 4);
        for (std::size_t k = two.row_begin(i); k < two.row_end(i); ++k)
            if (two.col(k) != i) CHECK(two.value(k) == -1.0);
    }

    const SparseMatrix three = build_anisotropic_poisson({1e-3, 1, 1, 3});
    const std::size_t c = 1 + 3 * 1 + 9 * 1;
    CHECK(three.at(c, c) == doctest::Approx(4.002).epsilon(1e-15));
    CHECK(three.at(c, c - 1) == -1e-3);
    CHECK(three.at(c, c + 1) == -1e-3);
    CHECK(three.at(c, c + 3) == -1.0);
    CHECK(three.at(c, c + 9) == -1.0);
}

TEST_CASE("poisson input validation") {
    CHECK_THROWS_AS(build_anisotropic_poisson({0.0, 1, 1, 4}), ValidationError);
    CHECK_THROWS_AS(build_anisotropic_poisson({1, 2, 1, 4}), ValidationError);
    CHECK_THROWS_AS(build_anisotropic_poisson({1, 1, 1, 0}), ValidationError);
    CHECK_THROWS_AS(build_anisotropic_poisson({1, 1, 1, 64}, 1000), CapacityError);
}

TEST_CASE("poisson symmetry, dominance and row sums") {
    const std::size_t nd = 5;
    const SparseMatrix A = build_anisotropic_poisson({0.3, 1e-4, 0.9, nd});
    CHECK(A.is_symmetric(0.0));
    for (std::size_t z = 0; z < nd; ++z)
        for (std::size_t y = 0; y < nd; ++y)
            for (std::size_t x = 0; x < nd; ++x) {
                const std::size_t i = x + nd * y + nd * nd * z;
                double sum = 0.0, off = 0.0;
                for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k) {
                    sum += A.value(k);
                    if (A.col(k) != i) off += std::abs(A.value(k));
                }
                CHECK(A.at(i, i) >= off);
                const bool interior = x > 0 && y > 0 && z > 0 && x + 1 < nd && y + 1 < nd && z + 1 < nd;
                if (interior)
                    CHECK(std::abs(sum) <= 1e-15);
                else
                    CHECK(sum > 0.0);
            }
}

TEST_CASE("coefficient permutation equals grid-axis permutation") {
    const std::size_t nd = 4;
    const std::array<double, 3> c{0.2, 0.05, 0.7};
    const SparseMatrix A = build_anisotropic_poisson({c[0], c[1], c[2], nd});
    // Swap axes x and z: coefficients (c3, c2, c1) with index map (x,y,z) -> (z,y,x).
    const SparseMatrix B = build_anisotropic_poisson({c[2], c[1], c[0], nd});
    auto perm = [nd](std::size_t i) {
        const std::size_t x = i % nd, y = (i / nd) % nd, z = i / (nd * nd);
        return z + nd * y + nd * nd * x;
    };
    for (std::size_t i = 0; i < A.nrows(); ++i)
        for (std::size_t j = 0; j < A.ncols(); ++j) CHECK(A.at(i, j) == B.at(perm(i), perm(j)));
}

TEST_CASE("diagonal dominance ratio examples") {
    CHECK(diagonal_dominance_ratio(SparseMatrix::identity(3)) == std::numeric_limits<double>::infinity());
    CHECK(diagonal_dominance_ratio(laplace1d(2)) == 2.0);
    CHECK(diagonal_dominance_ratio(laplace1d(3)) == 1.5);
}

TEST_CASE("timestep sequence examples") {
    TimestepSpec s;
    s.nd = 4;
    s.k_max = 4;
    s.reaction_scale = 0.0;
    s.dt = 1.0;
    const auto seq = build_timestep_sequence(s);
    REQUIRE(seq.size() == 4);
    const SparseMatrix K = build_anisotropic_poisson({1, 1, 1, 4});
    const Dense expect = [&] {
        Dense d = dense_of(K);
        for (std::size_t i = 0; i < d.size(); ++i) d[i][i] += 1.0;
        return d;
    }();
    for (const auto &A : seq) CHECK(max_abs_diff(dense_of(A), expect) == 0.0);

    TimestepSpec flat;
    flat.nd = 4;
    flat.k_max = 6;
    flat.decay = 1.0;
    const auto same = build_timestep_sequence(flat);
    CHECK(same[0] == same[2]);
    CHECK(same[1] == same[3]);
    CHECK(same[3] == same[5]);
    CHECK_FALSE(same[0] == same[1]);
}

TEST_CASE("timestep dominance grows and matrices stay SPD") {
    TimestepSpec s;
    s.nd = 8;
    s.k_max = 20;
    const auto seq = build_timestep_sequence(s);
    double prev = 0.0;
    for (const auto &A : seq) {
        CHECK(A.is_symmetric());
        const Vector d = A.diagonal();
        for (double v : d) CHECK(v > 0.0);
        const double eta = diagonal_dominance_ratio(A);
        CHECK(eta >= prev);
        prev = eta;
    }
    CHECK_THROWS_AS(build_timestep_sequence({4, 0}), ValidationError);
    CHECK_THROWS_AS(build_timestep_sequence({4, 3, -1.0}), ValidationError);
}

TEST_CASE("random vectors are seeded and bounded") {
    const Vector a = random_vector(50, 42), b = random_vector(50, 42), c = random_vector(50, 43);
    CHECK(a == b);
    CHECK(a != c);
    for (double v : a) CHECK((v >= -1.0 && v <= 1.0));
    CHECK(zero_vector(3) == Vector{0, 0, 0});
}
