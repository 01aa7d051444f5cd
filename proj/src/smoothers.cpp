#include "flexamg/smoothers.hpp"

#include "flexamg/error.hpp"

#include <json.hpp>

#include <string>

namespace flexamg {

std::string_view to_string(SmootherKind k) {
    switch (k) {
    case SmootherKind::Jacobi: return "jacobi";
    case SmootherKind::GSF: return "gsf";
    case SmootherKind::GSB: return "gsb";
    case SmootherKind::GSS: return "gss";
    }
    return "?";
}

std::string_view to_string(SmootherVariant v) {
    return v == SmootherVariant::L1 ? "l1" : "weighted";
}

std::string_view to_string(Ordering o) { return o == Ordering::CF ? "cf" : "lex"; }

std::optional<SmootherKind> parse_smoother_kind(std::string_view s) {
    for (auto k : {SmootherKind::Jacobi, SmootherKind::GSF, SmootherKind::GSB, SmootherKind::GSS})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

std::optional<SmootherVariant> parse_smoother_variant(std::string_view s) {
    if (s == "l1") return SmootherVariant::L1;
    if (s == "weighted") return SmootherVariant::Weighted;
    return std::nullopt;
}

std::optional<Ordering> parse_ordering(std::string_view s) {
    if (s == "lex") return Ordering::Lex;
    if (s == "cf") return Ordering::CF;
    return std::nullopt;
}

std::string smoother_to_json(const SmootherSpec &s) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(s.kind);
    j["variant"] = to_string(s.variant);
    j["ordering"] = to_string(s.ordering);
    if (s.variant == SmootherVariant::Weighted) {
        if (s.kind == SmootherKind::Jacobi) {
            j["omega"] = s.omega;
        } else {
            j["omega_i"] = s.omega_i;
            j["omega_o"] = s.omega_o;
        }
    }
    if (s.cf_reverse) j["cf_reverse"] = true;
    return j.dump();
}

SmootherSpec smoother_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(std::string("smoother json: ") + e.what());
    }
    SmootherSpec s;
    auto field = [&](const char *key) -> std::string {
        if (!j.contains(key) || !j[key].is_string())
            throw ValidationError(std::string("smoother json: missing string field '") + key + "'");
        return j[key].get<std::string>();
    };
    auto kind = parse_smoother_kind(field("kind"));
    auto variant = parse_smoother_variant(field("variant"));
    auto ordering = parse_ordering(field("ordering"));
    if (!kind || !variant || !ordering) throw ValidationError("smoother json: unknown enumerator");
    s.kind = *kind;
    s.variant = *variant;
    s.ordering = *ordering;
    s.omega = j.value("omega", 1.0);
    s.omega_i = j.value("omega_i", 1.0);
    s.omega_o = j.value("omega_o", 1.0);
    s.cf_reverse = j.value("cf_reverse", false);
    return s;
}

Vector compute_l1_diagonal(const SparseMatrix &A, const BlockPartition &partition) {
    if (partition.num_rows() != A.nrows())
        throw DimensionError("compute_l1_diagonal: partition does not cover the matrix rows");
    Vector d(A.nrows(), 0.0);
    for (std::size_t b = 0; b < partition.num_blocks(); ++b) {
        const std::size_t lo = partition.begin(b), hi = partition.end(b);
        for (std::size_t i = lo; i < hi; ++i)
            for (std::size_t k = A.row_begin(i); k < A.row_end(i); ++k)
                if (A.col(k) < lo || A.col(k) >= hi) d[i] += std::abs(A.value(k));
    }
    return d;
}

namespace {

enum class Direction { Forward, Backward };

struct SweepData {
    const SparseMatrix &A;
    std::span<const double> diag;
    std::span<const double> l1;
    const BlockPartition &partition;
    const CfSplitting *cf;
    std::span<const std::size_t> cf_order;
    std::span<const std::size_t> cf_block_coarse;
};

// One pass of x <- x + B^{-1} r0 with B = (1/outer) * ((1/inner) Dmod - L_visible)
// assembled per block. Off-block couplings are frozen in r0.
void sweep(const SweepData &d, std::span<double> x, std::span<const double> b,
           const SmootherSpec &spec, Direction dir, SmootherWorkspace &ws) {
    const SparseMatrix &A = d.A;
    const std::size_t n = A.nrows();
    const bool l1 = spec.variant == SmootherVariant::L1;
    const bool jacobi = spec.kind == SmootherKind::Jacobi;
    const double inner = l1 ? 1.0 : (jacobi ? spec.omega : spec.omega_i);
    const double outer = l1 || jacobi ? 1.0 : spec.omega_o;
    const bool cf = spec.ordering == Ordering::CF;
    if (l1 && d.l1.size() != n) throw DimensionError("l1 smoother needs an l1 diagonal per row");
    if (cf && (d.cf == nullptr || d.cf->marks.size() != n))
        throw DimensionError("C-F ordering needs C/F marks per row");

    ws.r0.resize(n);
    ws.delta.assign(n, 0.0);
    residual(A, x, b, ws.r0);
    const bool count = ws.visits.size() == n;
    const auto ptr = A.row_ptr();
    const auto col = A.col_idx();
    const auto val = A.values();
    const PointType first_group = spec.cf_reverse ? PointType::F : PointType::C;

    auto update = [&](std::size_t i, std::size_t lo, std::size_t hi, bool see_block, bool first_only) {
        const double dmod = d.diag[i] + (l1 ? d.l1[i] : 0.0);
        if (dmod == 0.0)
            throw SingularMatrixError("smoother: zero modified diagonal in row " + std::to_string(i), i);
        double s = outer * ws.r0[i];
        if (see_block) {
            for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
                const std::size_t j = col[k];
                if (j < lo || j >= hi || j == i) continue;
                if (first_only && d.cf->marks[j] != first_group) continue;
                s -= val[k] * ws.delta[j];
            }
        }
        ws.delta[i] = inner * s / dmod;
        if (count) ++ws.visits[i];
    };

    std::size_t offset = 0;
    for (std::size_t blk = 0; blk < d.partition.num_blocks(); ++blk) {
        const std::size_t lo = d.partition.begin(blk), hi = d.partition.end(blk);
        if (!cf) {
            if (jacobi) {
                for (std::size_t i = lo; i < hi; ++i) update(i, lo, hi, false, false);
            } else if (dir == Direction::Forward) {
                for (std::size_t i = lo; i < hi; ++i) update(i, lo, hi, true, false);
            } else {
                for (std::size_t i = hi; i-- > lo;) update(i, lo, hi, true, false);
            }
            continue;
        }
        const std::size_t len = hi - lo;
        const std::size_t nc = d.cf_block_coarse[blk];
        // cf_order holds C rows then F rows of this block.
        std::span<const std::size_t> c_rows = d.cf_order.subspan(offset, nc);
        std::span<const std::size_t> f_rows = d.cf_order.subspan(offset + nc, len - nc);
        offset += len;
        std::span<const std::size_t> g1 = spec.cf_reverse ? f_rows : c_rows;
        std::span<const std::size_t> g2 = spec.cf_reverse ? c_rows : f_rows;
        if (jacobi) {
            for (std::size_t i : g1) update(i, lo, hi, false, false);
            for (std::size_t i : g2) update(i, lo, hi, true, true);
        } else if (dir == Direction::Forward) {
            for (std::size_t i : g1) update(i, lo, hi, true, false);
            for (std::size_t i : g2) update(i, lo, hi, true, false);
        } else {
            for (auto it = g1.rbegin(); it != g1.rend(); ++it) update(*it, lo, hi, true, false);
            for (auto it = g2.rbegin(); it != g2.rend(); ++it) update(*it, lo, hi, true, false);
        }
    }
    for (std::size_t i = 0; i < n; ++i) x[i] += ws.delta[i];
}

void apply(const SweepData &d, std::span<double> x, std::span<const double> b,
           const SmootherSpec &spec, SmootherWorkspace &ws) {
    if (x.size() != d.A.ncols() || b.size() != d.A.nrows())
        throw DimensionError("apply_smoother: vector length does not match the matrix");
    switch (spec.kind) {
    case SmootherKind::Jacobi:
    case SmootherKind::GSF: sweep(d, x, b, spec, Direction::Forward, ws); break;
    case SmootherKind::GSB: sweep(d, x, b, spec, Direction::Backward, ws); break;
    case SmootherKind::GSS:
        sweep(d, x, b, spec, Direction::Forward, ws);
        sweep(d, x, b, spec, Direction::Backward, ws);
        break;
    }
}

struct CfOrder {
    std::vector<std::size_t> order;
    std::vector<std::size_t> block_coarse;
};

CfOrder make_cf_order(const BlockPartition &partition, const CfSplitting *cf) {
    CfOrder o;
    if (cf == nullptr) return o;
    for (std::size_t blk = 0; blk < partition.num_blocks(); ++blk) {
        std::size_t nc = 0;
        for (std::size_t i = partition.begin(blk); i < partition.end(blk); ++i)
            if (cf->is_coarse(i)) {
                o.order.push_back(i);
                ++nc;
            }
        for (std::size_t i = partition.begin(blk); i < partition.end(blk); ++i)
            if (!cf->is_coarse(i)) o.order.push_back(i);
        o.block_coarse.push_back(nc);
    }
    return o;
}

} // namespace

void apply_smoother(const Level &level, std::span<double> x, std::span<const double> b,
                    const SmootherSpec &spec, SmootherWorkspace &ws) {
    const SweepData d{level.A,        level.diag,     level.l1_diag,        level.partition,
                      &level.split,   level.cf_order, level.cf_block_coarse};
    apply(d, x, b, spec, ws);
}

Vector apply_smoother(const SparseMatrix &A, std::span<const double> x, std::span<const double> b,
                      const SmootherSpec &spec, const BlockPartition &partition,
                      std::span<const double> l1diag, const CfSplitting *cf_marks) {
    if (partition.num_rows() != A.nrows())
        throw DimensionError("apply_smoother: partition does not cover the matrix rows");
    const Vector diag = A.diagonal();
    const CfOrder order = make_cf_order(partition, cf_marks);
    const SweepData d{A, diag, l1diag, partition, cf_marks, order.order, order.block_coarse};
    Vector out(x.begin(), x.end());
    SmootherWorkspace ws;
    apply(d, out, b, spec, ws);
    return out;
}

DenseMatrix smoother_error_operator(const SparseMatrix &A, const SmootherSpec &spec,
                                    const BlockPartition &partition, std::span<const double> l1diag,
                                    const CfSplitting *cf_marks, std::size_t cap) {
    const std::size_t n = A.nrows();
    DenseMatrix T(n, n, cap);
    const Vector diag = A.diagonal();
    const CfOrder order = make_cf_order(partition, cf_marks);
    const SweepData d{A, diag, l1diag, partition, cf_marks, order.order, order.block_coarse};
    const Vector zero(n, 0.0);
    SmootherWorkspace ws;
    Vector e(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        apply(d, e, zero, spec, ws);
        T.set_column(j, e);
    }
    return T;
}

} // namespace flexamg
