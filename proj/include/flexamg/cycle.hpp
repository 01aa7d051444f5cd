#pragma once

#include "flexamg/amg_setup.hpp"
#include "flexamg/smoothers.hpp"
#include "flexamg/sparse.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flexamg {

inline constexpr std::size_t kDefaultDepthCap = 256;
inline constexpr std::size_t kDefaultFlexLevels = 5;

enum class InstrKind : std::uint8_t { Relax, Restrict, CoarseCorrection, StdVSolve };

/// One cycle step. `level` is the level the step acts on: Relax and
/// StdVSolve at `level`, Restrict from `level` to level-1, CoarseCorrection
/// from level-1 into `level`.
struct Instruction {
    InstrKind kind = InstrKind::Relax;
    std::size_t level = 0;
    SmootherSpec smoother{};
    double alpha = 1.0;

    static Instruction relax(std::size_t level, const SmootherSpec &s) {
        return {InstrKind::Relax, level, s, 1.0};
    }
    static Instruction restrict_from(std::size_t level) { return {InstrKind::Restrict, level, {}, 1.0}; }
    static Instruction correct(std::size_t to_level, double alpha) {
        return {InstrKind::CoarseCorrection, to_level, {}, alpha};
    }
    static Instruction vsolve(std::size_t level) { return {InstrKind::StdVSolve, level, {}, 1.0}; }

    friend bool operator==(const Instruction &, const Instruction &) = default;
};

struct FlexProgram {
    std::vector<Instruction> instrs;
    std::size_t l_top = 0;
    std::size_t l_std = 0;

    friend bool operator==(const FlexProgram &, const FlexProgram &) = default;
};

/// l_std for a hierarchy whose finest level is `l_top`: max(1, l_top - n_flex + 1),
/// or 0 (direct solve) when the hierarchy has at most two levels.
std::size_t standard_cutoff(std::size_t l_top, std::size_t n_flex);

/// Throws ValidationError naming the offending instruction index.
void validate_program(const FlexProgram &prog, std::size_t num_levels,
                      std::size_t depth_cap = kDefaultDepthCap);
void validate_program(const FlexProgram &prog, const Hierarchy &h,
                      std::size_t depth_cap = kDefaultDepthCap);

/// Per-level work vectors, sized once for a hierarchy.
class CycleState {
public:
    explicit CycleState(const Hierarchy &h);

    std::vector<Vector> x;
    std::vector<Vector> b;
    std::vector<Vector> r;
    SmootherWorkspace ws;
};

/// One application of the program. `x` is updated in place.
void execute_cycle(const FlexProgram &prog, const Hierarchy &h, std::span<double> x,
                   std::span<const double> b, CycleState &state);
Vector execute_cycle(const FlexProgram &prog, const Hierarchy &h, std::span<const double> x,
                     std::span<const double> b);

/// Recursive V(1,1): l1-GSF lexicographic pre-smoothing, l1-GSB post-smoothing,
/// dense LU on level 0.
void standard_v_cycle(const Hierarchy &h, std::size_t level, std::span<double> x,
                      std::span<const double> b, CycleState &state);
Vector standard_v_cycle(const Hierarchy &h, std::size_t level, std::span<const double> x,
                        std::span<const double> b);

/// V(1,1) written out as a flexible program over all levels with l_std = 0.
FlexProgram v_cycle_program(std::size_t l_top, const SmootherSpec &pre, const SmootherSpec &post,
                            std::size_t nu_pre = 1, std::size_t nu_post = 1);

struct WorkUnitOptions {
    /// Also count residual, restriction and interpolation products.
    bool include_transfers = false;
};

/// Smoothing cost in units of one finest-level operator application.
double cycle_work_units(const FlexProgram &prog, const Hierarchy &h, const WorkUnitOptions &opts = {});
/// Same model from per-level complexities c_l = nnz(A_l)/nnz(A_top), indexed by level.
double cycle_work_units(const FlexProgram &prog, std::span<const double> complexity);

/// Dense E with e' = E e, one column per unit error.
DenseMatrix assemble_iteration_matrix(const FlexProgram &prog, const Hierarchy &h,
                                      std::size_t cap = kDenseEntryCap);

struct SpectralEstimate {
    double radius = 0.0;
    std::size_t iterations = 0;
    bool approximate = false;
};

struct SpectralOptions {
    double tol = 1e-8;
    std::size_t max_iter = 10000;
    std::size_t restarts = 3;
    std::size_t subspace = 4;
    std::uint64_t seed = 0;
};

/// Largest eigenvalue modulus by subspace power iteration with Ritz extraction.
SpectralEstimate spectral_radius(const DenseMatrix &E, const SpectralOptions &opts = {});
/// All eigenvalues by dense decomposition, sorted by decreasing modulus.
std::vector<std::complex<double>> eigenvalues(const DenseMatrix &E);

/// Geometric mean of ||r_{k+1}||/||r_k|| over the last `tail` of `iterations`
/// cycles applied to a random error with b = 0.
double measure_asymptotic_rate(const FlexProgram &prog, const Hierarchy &h,
                               std::size_t iterations = 200, std::size_t tail = 20,
                               std::uint64_t seed = 0);

enum class ToleranceMode : std::uint8_t { Relative, Absolute };

struct SolveOptions {
    double tol = 1e-8;
    std::size_t max_iter = 100;
    ToleranceMode mode = ToleranceMode::Relative;
};

inline constexpr double kDivergedRho = 10.0;
inline constexpr double kDivergenceFactor = 1e8;

struct SolveStats {
    std::size_t N = 0;
    double rho = 0.0;
    double wu_total = 0.0;
    bool converged = false;
    bool diverged = false;
    /// ||r_k||_2 for k = 0..N.
    std::vector<double> history;
    Vector x;
};

/// rho = (r_last / r_first)^(1/N); 0 when N = 0.
double convergence_rate(double r_first, double r_last, std::size_t N);

SolveStats run_solver(const FlexProgram &prog, const Hierarchy &h, std::span<const double> b,
                      std::span<const double> x0, const SolveOptions &opts = {});

// Text forms.
std::string program_to_text(const FlexProgram &prog);
FlexProgram program_from_text(std::string_view text);
std::string program_to_dot(const FlexProgram &prog, std::string_view name = "cycle");

} // namespace flexamg
