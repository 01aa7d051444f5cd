#include "support.hpp"

#include "flexamg/error.hpp"
#include "flexamg/problems.hpp"
#include "flexamg/smoothers.hpp"

#include <doctest.h>

using namespace flexamg;
using namespace testsupport;

namespace {

// Dense preconditioner B for one sweep. `pos` gives each row's position in
// the sweep order within its block; forward sweeps see earlier positions.
Dense oracle_B(const SparseMatrix &A, const SmootherSpec &s, const BlockPartition &part, const Vector &l1,
               const CfSplitting *cf, bool backward) {
    const std::size_t n = A.nrows();
    const Dense a = dense_of(A);
    const auto block = part.block_of_rows();
    std::vector<std::size_t> pos(n), group(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = i;
        if (s.ordering == Ordering::CF) {
            const bool first = cf->is_coarse(i) != s.cf_reverse;
            group[i] = first ? 0 : 1;
        }
    }
    const bool jac = s.kind == SmootherKind::Jacobi;
    const bool isl1 = s.variant == SmootherVariant::L1;
    const double inner = isl1 ? 1.0 : (jac ? s.omega : s.omega_i);
    const double outer = (isl1 || jac) ? 1.0 : s.omega_o;
    Dense B(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        B[i][i] = (a[i][i] + (isl1 ? l1[i] : 0.0)) / inner;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || block[j] != block[i]) continue;
            bool visible;
            if (jac)
                visible = s.ordering == Ordering::CF && group[j] == 0 && group[i] == 1;
            else if (group[j] != group[i])
                visible = group[j] < group[i];  // group order is kept in both directions
            else
                visible = backward ? pos[j] > pos[i] : pos[j] < pos[i];
            if (visible) B[i][j] = a[i][j];
        }
        for (double &v : B[i]) v /= outer;
    }
    return B;
}

Vector oracle_sweep(const SparseMatrix &A, const Vector &x, const Vector &b, const SmootherSpec &s,
                    const BlockPartition &part, const Vector &l1, const CfSplitting *cf, bool backward) {
    const Dense Binv = dense_inverse(oracle_B(A, s, part, l1, cf, backward));
    const Vector d = dense_apply(Binv, residual(A, x, b));
    return axpy(1.0, d, x);
}

// Classical sequential Gauss-Seidel, written independently.
Vector classical_gs(const SparseMatrix &A, Vector x, const Vector &b, bool backward) {
    const Dense a = dense_of(A);
    const std::size_t n = x.size();
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = backward ? n - 1 - t : t;
        double s = b[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

CfSplitting random_cf(std::size_t n, Rng &rng) {
    CfSplitting cf;
    for (std::size_t i = 0; i < n; ++i) cf.marks.push_back(rng.bernoulli(0.4) ? PointType::C : PointType::F);
    return cf;
}

SmootherSpec random_spec(Rng &rng) {
    SmootherSpec s;
    s.kind = static_cast<SmootherKind>(rng.index(3));
    s.variant = rng.bernoulli(0.5) ? SmootherVariant::L1 : SmootherVariant::Weighted;
    s.ordering = rng.bernoulli(0.5) ? Ordering::CF : Ordering::Lex;
    s.omega = rng.uniform(0.1, 1.9);
    s.omega_i = rng.uniform(0.1, 1.9);
    s.omega_o = rng.uniform(0.1, 1.9);
    s.cf_reverse = rng.bernoulli(0.2);
    return s;
}

} // namespace

TEST_CASE("l1 diagonal examples") {
    const SparseMatrix A = laplace1d(3);
    CHECK(compute_l1_diagonal(A, BlockPartition::uniform(3, 1)) == Vector{0, 0, 0});
    CHECK(compute_l1_diagonal(A, BlockPartition({0, 2, 3})) == Vector{0, 1, 1});
    const SparseMatrix D = SparseMatrix::from_triplets(3, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
    CHECK(compute_l1_diagonal(D, BlockPartition::uniform(3, 3)) == Vector{0, 0, 0});
    CHECK_THROWS_AS(compute_l1_diagonal(A, BlockPartition::uniform(4, 2)), DimensionError);
}

TEST_CASE("smoother examples on the 3-point Laplacian") {
    const SparseMatrix A = laplace1d(3);
    const BlockPartition one = BlockPartition::uniform(3, 1);
    const Vector l1 = compute_l1_diagonal(A, one);
    const Vector b{1, 1, 1}, x0{0, 0, 0};
    SmootherSpec jac{SmootherKind::Jacobi, SmootherVariant::Weighted, Ordering::Lex, 1.0};
    CHECK(apply_smoother(A, x0, b, jac, one, {}, nullptr) == Vector{0.5, 0.5, 0.5});
    SmootherSpec gsf{SmootherKind::GSF, SmootherVariant::Weighted, Ordering::Lex, 1.0, 1.0, 1.0};
    CHECK(apply_smoother(A, x0, b, gsf, one, {}, nullptr) == Vector{0.5, 0.75, 0.875});
    SmootherSpec l1gsf{SmootherKind::GSF, SmootherVariant::L1, Ordering::Lex};
    CHECK(apply_smoother(A, x0, b, l1gsf, one, l1, nullptr) == Vector{0.5, 0.75, 0.875});
}

TEST_CASE("error operator examples") {
    const SparseMatrix one = SparseMatrix::from_triplets(1, 1, {{0, 0, 3.0}});
    const SmootherSpec jac{SmootherKind::Jacobi, SmootherVariant::Weighted, Ordering::Lex, 1.0};
    const BlockPartition p1 = BlockPartition::uniform(1, 1);
    CHECK(smoother_error_operator(one, jac, p1, {}, nullptr)(0, 0) == 0.0);

    const SparseMatrix D = SparseMatrix::from_triplets(3, 3, {{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
    CHECK(smoother_error_operator(D, jac, BlockPartition::uniform(3, 2), {}, nullptr).max_abs() == 0.0);

    const DenseMatrix T = smoother_error_operator(laplace1d(3), jac, BlockPartition::uniform(3, 1), {}, nullptr);
    CHECK(T.column(0) == Vector{0, 0.5, 0});
    CHECK(T(0, 0) == 0.0);
    CHECK(T(0, 1) == 0.5);
    CHECK(T(0, 2) == 0.0);
    CHECK(T(1, 0) == 0.5);
    CHECK(T(1, 2) == 0.5);
}

TEST_CASE("zero modified diagonal names the row") {
    const SparseMatrix A(3, 3, {0, 1, 4, 5}, {0, 0, 1, 2, 2}, {1.0, 1.0, 0.0, 1.0, 1.0});
    const SmootherSpec jac{SmootherKind::Jacobi, SmootherVariant::Weighted};
    try {
        apply_smoother(A, Vector{0, 0, 0}, Vector{1, 1, 1}, jac, BlockPartition::uniform(3, 1), {}, nullptr);
        FAIL("expected a singular matrix error");
    } catch (const SingularMatrixError &e) {
        CHECK(e.row() == 1);
    }
}

TEST_CASE("missing inputs are rejected") {
    const SparseMatrix A = laplace1d(4);
    const BlockPartition p = BlockPartition::uniform(4, 2);
    SmootherSpec l1{SmootherKind::GSF, SmootherVariant::L1, Ordering::Lex};
    CHECK_THROWS_AS(apply_smoother(A, Vector(4), Vector(4), l1, p, {}, nullptr), DimensionError);
    SmootherSpec cf{SmootherKind::GSF, SmootherVariant::Weighted, Ordering::CF};
    CHECK_THROWS_AS(apply_smoother(A, Vector(4), Vector(4), cf, p, {}, nullptr), DimensionError);
    CHECK_THROWS_AS(apply_smoother(A, Vector(3), Vector(4), SmootherSpec{}, p, compute_l1_diagonal(A, p), nullptr),
                    DimensionError);
}

TEST_CASE("single block reduces to classical Gauss-Seidel") {
    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.index(99);
        const SparseMatrix A = random_spd(n, 3, rng);
        const BlockPartition one = BlockPartition::uniform(n, 1);
        const Vector l1 = compute_l1_diagonal(A, one);
        const Vector x = random_vec(n, rng), b = random_vec(n, rng);
        for (bool backward : {false, true}) {
            const SmootherKind k = backward ? SmootherKind::GSB : SmootherKind::GSF;
            const Vector ref = classical_gs(A, x, b, backward);
            const SmootherSpec hyb{k, SmootherVariant::Weighted, Ordering::Lex, 1.0, 1.0, 1.0};
            const SmootherSpec l1s{k, SmootherVariant::L1, Ordering::Lex};
            CHECK(max_abs_diff(apply_smoother(A, x, b, hyb, one, {}, nullptr), ref) <= 1e-14 * (1 + norm2(ref)));
            CHECK(max_abs_diff(apply_smoother(A, x, b, l1s, one, l1, nullptr), ref) <= 1e-14 * (1 + norm2(ref)));
        }
        const SmootherSpec wj{SmootherKind::Jacobi, SmootherVariant::Weighted, Ordering::Lex, 1.0};
        const SmootherSpec lj{SmootherKind::Jacobi, SmootherVariant::L1, Ordering::Lex};
        CHECK(apply_smoother(A, x, b, wj, one, {}, nullptr) == apply_smoother(A, x, b, lj, one, l1, nullptr));
    }
}

TEST_CASE("sweeps match the dense B oracle for every variant") {
    Rng rng(33);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.index(60);
        const SparseMatrix A = random_spd(n, 3, rng);
        const BlockPartition part = BlockPartition::uniform(n, 1 + rng.index(6));
        const Vector l1 = compute_l1_diagonal(A, part);
        const CfSplitting cf = random_cf(n, rng);
        const SmootherSpec s = random_spec(rng);
        const Vector x = random_vec(n, rng), b = random_vec(n, rng);
        const Vector got = apply_smoother(A, x, b, s, part, l1, &cf);
        const Vector want = oracle_sweep(A, x, b, s, part, l1, &cf, s.kind == SmootherKind::GSB);
        CHECK(max_abs_diff(got, want) <= 1e-10 * (1 + norm2(want)));
    }
}

TEST_CASE("fixed point is preserved") {
    Rng rng(44);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.index(80);
        const SparseMatrix A = random_spd(n, 3, rng);
        const BlockPartition part = BlockPartition::uniform(n, 1 + rng.index(8));
        const Vector l1 = compute_l1_diagonal(A, part);
        const CfSplitting cf = random_cf(n, rng);
        SmootherSpec s = random_spec(rng);
        if (rng.bernoulli(0.25)) s.kind = SmootherKind::GSS;
        const Vector x = random_vec(n, rng);
        const Vector b = spmv(A, x);
        CHECK(max_abs_diff(apply_smoother(A, x, b, s, part, l1, &cf), x) <= 1e-12 * norm2(x));
    }
}

TEST_CASE("symmetric sweep is forward then backward") {
    Rng rng(55);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.index(80);
        const SparseMatrix A = random_spd(n, 3, rng);
        const BlockPartition part = BlockPartition::uniform(n, 1 + rng.index(8));
        const Vector l1 = compute_l1_diagonal(A, part);
        const CfSplitting cf = random_cf(n, rng);
        SmootherSpec s = random_spec(rng);
        s.kind = SmootherKind::GSS;
        SmootherSpec f = s, bk = s;
        f.kind = SmootherKind::GSF;
        bk.kind = SmootherKind::GSB;
        const Vector x = random_vec(n, rng), b = random_vec(n, rng);
        const Vector two = apply_smoother(A, apply_smoother(A, x, b, f, part, l1, &cf), b, bk, part, l1, &cf);
        CHECK(apply_smoother(A, x, b, s, part, l1, &cf) == two);
    }
}

TEST_CASE("sweep agrees with its error operator") {
    Rng rng(66);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.index(99);
        const SparseMatrix A = random_spd(n, 3, rng);
        const BlockPartition part = BlockPartition::uniform(n, 1 + rng.index(8));
        const Vector l1 = compute_l1_diagonal(A, part);
        const CfSplitting cf = random_cf(n, rng);
        SmootherSpec s = random_spec(rng);
        if (rng.bernoulli(0.25)) s.kind = SmootherKind::GSS;
        const DenseMatrix T = smoother_error_operator(A, s, part, l1, &cf);
        const Vector xs = random_vec(n, rng), x = random_vec(n, rng);
        const Vector b = spmv(A, xs);
        const Vector out = apply_smoother(A, x, b, s, part, l1, &cf);
        const Vector e_out = axpy(-1.0, xs, out);
        const Vector e_pred = T.apply(axpy(-1.0, xs, x));
        CHECK(max_abs_diff(e_out, e_pred) <= 1e-10 * (1 + norm2(e_pred)));
    }
}

TEST_CASE("C-F ordered sweeps visit each row once") {
    const SparseMatrix A = build_anisotropic_poisson({1, 1, 1, 6});
    const Hierarchy h = build_hierarchy(A);
    const Level &top = h.level(h.top());
    for (SmootherKind k : {SmootherKind::Jacobi, SmootherKind::GSF, SmootherKind::GSB, SmootherKind::GSS}) {
        for (bool rev : {false, true}) {
            SmootherSpec s{k, SmootherVariant::L1, Ordering::CF};
            s.cf_reverse = rev;
            SmootherWorkspace ws;
            ws.visits.assign(A.nrows(), 0);
            Vector x(A.nrows(), 0.0), b(A.nrows(), 1.0);
            apply_smoother(top, x, b, s, ws);
            for (std::size_t v : ws.visits) CHECK(v == static_cast<std::size_t>(s.sweeps()));
        }
    }
}

TEST_CASE("level form matches standalone form") {
    const SparseMatrix A = build_anisotropic_poisson({1e-3, 1, 1, 6});
    const Hierarchy h = build_hierarchy(A);
    const Level &lv = h.level(h.top());
    Rng rng(77);
    for (int t = 0; t < 20; ++t) {
        const SmootherSpec s = random_spec(rng);
        Vector x = random_vec(A.nrows(), rng);
        const Vector b = random_vec(A.nrows(), rng);
        const Vector ref = apply_smoother(A, x, b, s, lv.partition, lv.l1_diag, &lv.split);
        SmootherWorkspace ws;
        apply_smoother(lv, x, b, s, ws);
        CHECK(x == ref);
    }
}

TEST_CASE("smoother json round trip") {
    Rng rng(88);
    for (int t = 0; t < 50; ++t) {
        SmootherSpec s = random_spec(rng);
        const SmootherSpec back = smoother_from_json(smoother_to_json(s));
        CHECK(back.kind == s.kind);
        CHECK(back.variant == s.variant);
        CHECK(back.ordering == s.ordering);
        CHECK(back.cf_reverse == s.cf_reverse);
        if (s.variant == SmootherVariant::Weighted && s.kind == SmootherKind::Jacobi) CHECK(back.omega == s.omega);
        if (s.variant == SmootherVariant::Weighted && s.kind != SmootherKind::Jacobi) {
            CHECK(back.omega_i == s.omega_i);
            CHECK(back.omega_o == s.omega_o);
        }
    }
    CHECK(smoother_to_json({SmootherKind::GSF, SmootherVariant::L1, Ordering::CF}) ==
          R"({"kind":"gsf","variant":"l1","ordering":"cf"})");
    CHECK_THROWS_AS(smoother_from_json(R"({"kind":"sor","variant":"l1","ordering":"cf"})"), ValidationError);
    CHECK_THROWS_AS(smoother_from_json("{"), ValidationError);
}
