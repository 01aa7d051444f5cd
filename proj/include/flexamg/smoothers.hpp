#pragma once

#include "flexamg/amg_setup.hpp"
#include "flexamg/sparse.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace flexamg {

enum class SmootherKind : std::uint8_t { Jacobi, GSF, GSB, GSS };
enum class SmootherVariant : std::uint8_t { Weighted, L1 };
enum class Ordering : std::uint8_t { Lex, CF };

/// One relaxation step. Weighted Jacobi reads `omega`; hybrid Gauss-Seidel
/// reads `omega_i` (inner, local) and `omega_o` (outer, block coupling);
/// l1 variants ignore every weight.
struct SmootherSpec {
    SmootherKind kind = SmootherKind::GSF;
    SmootherVariant variant = SmootherVariant::L1;
    Ordering ordering = Ordering::Lex;
    double omega = 1.0;
    double omega_i = 1.0;
    double omega_o = 1.0;
    /// CF ordering relaxes F points before C points when set.
    bool cf_reverse = false;

    /// Number of sweeps one application costs (GSS counts two).
    int sweeps() const noexcept { return kind == SmootherKind::GSS ? 2 : 1; }

    friend bool operator==(const SmootherSpec &, const SmootherSpec &) = default;
};

std::string_view to_string(SmootherKind k);
std::string_view to_string(SmootherVariant v);
std::string_view to_string(Ordering o);
std::optional<SmootherKind> parse_smoother_kind(std::string_view s);
std::optional<SmootherVariant> parse_smoother_variant(std::string_view s);
std::optional<Ordering> parse_ordering(std::string_view s);

/// Compact JSON object, e.g. {"kind":"gsf","variant":"l1","ordering":"cf"}.
/// Weights are written only when the variant reads them.
std::string smoother_to_json(const SmootherSpec &s);
SmootherSpec smoother_from_json(std::string_view text);

/// d_ii = sum of |a_ij| over columns outside row i's block.
Vector compute_l1_diagonal(const SparseMatrix &A, const BlockPartition &partition);

/// Scratch buffers reused across sweeps. When `visits` has one slot per row
/// every row update increments its counter.
struct SmootherWorkspace {
    Vector r0;
    Vector delta;
    std::vector<std::size_t> visits;
};

/// x <- x + B^{-1}(b - A x) in place, using the precomputed level data.
void apply_smoother(const Level &level, std::span<double> x, std::span<const double> b,
                    const SmootherSpec &spec, SmootherWorkspace &ws);

/// Standalone form. `l1diag` may be empty unless the variant is l1 and
/// `cf_marks` may be null unless the ordering is CF.
Vector apply_smoother(const SparseMatrix &A, std::span<const double> x, std::span<const double> b,
                      const SmootherSpec &spec, const BlockPartition &partition,
                      std::span<const double> l1diag, const CfSplitting *cf_marks);

/// Dense T = I - B^{-1} A assembled column by column from sweeps on unit
/// vectors with b = 0.
DenseMatrix smoother_error_operator(const SparseMatrix &A, const SmootherSpec &spec,
                                    const BlockPartition &partition, std::span<const double> l1diag,
                                    const CfSplitting *cf_marks, std::size_t cap = kDenseEntryCap);

} // namespace flexamg
