#pragma once

#include "flexamg/grammar.hpp"
#include "flexamg/krylov.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace flexamg {

enum class EvalSolver : std::uint8_t { Stationary, Pcg };
enum class FitnessMode : std::uint8_t { WorkUnits, WallClock };

std::string to_string(FitnessMode m);
FitnessMode parse_fitness_mode(std::string_view s);

/// One proxy system with its hierarchy built once and shared by every
/// individual.
struct EvalProblem {
    std::string name;
    std::shared_ptr<const Hierarchy> h;
    Vector b;
    Vector x0;
    EvalSolver solver = EvalSolver::Stationary;
    SolveOptions stationary{1e-8, 100, ToleranceMode::Absolute};
    PcgOptions krylov{1e-6, 100};
};

/// Random right-hand side from `seed`, zero initial guess.
EvalProblem make_eval_problem(std::string name, const SparseMatrix &A, EvalSolver solver, std::uint64_t seed,
                              const SetupParams &setup = {});

struct Fitness {
    double cost_per_iter = 0.0;
    double rho = 0.0;
    double N = 0.0;
    double wu_total = 0.0;
    bool converged = false;
};

struct Individual {
    std::size_t id = 0;
    TreeNode genotype;
    /// Decoded for the first problem's hierarchy.
    FlexProgram phenotype;
    std::uint64_t hash = 0;
    Fitness fitness;
};

using Objectives = std::array<double, 2>;

inline Objectives objectives(const Fitness &f) { return {f.cost_per_iter, f.rho}; }

/// Runs one decoded program on every problem and averages (T, N, rho).
Fitness evaluate_program(const Grammar &g, const TreeNode &tree, std::span<const EvalProblem> problems,
                         FitnessMode mode = FitnessMode::WorkUnits);

struct EvalCache;

/// Fills in phenotype, hash and fitness. Work is split over `workers`
/// threads; results do not depend on the worker count. In work-unit mode
/// identical phenotypes are evaluated once per cache.
void evaluate_population(const Grammar &g, std::vector<Individual> &pop, std::span<const EvalProblem> problems,
                         FitnessMode mode, std::size_t workers, EvalCache *cache = nullptr);

struct EvalCache {
    std::vector<std::pair<std::string, Fitness>> entries;  // sorted by key
    std::size_t hits = 0;
    std::size_t misses = 0;
    const Fitness *find(const std::string &key) const;
    void insert(const std::string &key, const Fitness &f);
};

bool dominates(const Objectives &a, const Objectives &b);
/// Fronts of indices, each in ascending index order.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Objectives> pts);
/// Crowding distance of each member of `front`, in the same order.
std::vector<double> crowding_distance(std::span<const Objectives> pts, std::span<const std::size_t> front);
/// Indices of the mu survivors, best front first.
std::vector<std::size_t> nsga2_select(std::span<const Objectives> pts, std::size_t mu);
std::vector<Individual> nsga2_select(const std::vector<Individual> &parents, const std::vector<Individual> &offspring,
                                     std::size_t mu);
/// Area dominated by the points and bounded by `ref`; points outside add nothing.
double hypervolume(std::span<const Objectives> pts, const Objectives &ref);

/// Non-dominated members with one representative per phenotype, by cost.
std::vector<Individual> pareto_front(const std::vector<Individual> &pop);
/// Union of several fronts, re-sorted.
std::vector<Individual> merge_fronts(const std::vector<std::vector<Individual>> &fronts);

struct EvoParams {
    std::size_t mu = 256;
    std::size_t lambda = 256;
    std::size_t rho0 = 2048;
    double pc = 0.7;
    std::size_t t_max = 100;
    std::uint64_t seed = 0;
    std::size_t depth_cap = kDefaultDepthCap;
    std::size_t init_depth = 40;
    FitnessMode fitness_mode = FitnessMode::WorkUnits;
    std::size_t workers = 1;
    std::size_t n_flex = kDefaultFlexLevels;
    bool include_zero_weight = false;
    Objectives hv_ref{1000.0, 1.0};

    /// mu = lambda = 32, rho0 = 128, t_max = 20.
    static EvoParams desk();
    void validate() const;
};

struct GenerationReport {
    std::size_t gen = 0;
    /// Individuals evaluated in this generation: the initial population for
    /// generation 0, the offspring afterwards.
    const std::vector<Individual> *evaluated = nullptr;
    /// Population after selection.
    const std::vector<Individual> *population = nullptr;
    double hypervolume = 0.0;
};

struct EvolveResult {
    std::vector<Individual> population;
    std::vector<Individual> front;
    std::vector<double> hypervolume;  // per generation, 0..t_max
    std::size_t evaluations = 0;
    std::size_t cache_hits = 0;
};

EvolveResult evolve(const Grammar &g, std::span<const EvalProblem> problems, const EvoParams &params,
                    const std::function<void(const GenerationReport &)> &on_generation = {});

// Output formats.
void write_generation_jsonl(std::ostream &out, std::size_t gen, const std::vector<Individual> &inds);
void write_front_csv(std::ostream &out, const std::vector<Individual> &front);

} // namespace flexamg
