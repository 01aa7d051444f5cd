#pragma once

#include "flexamg/cycle.hpp"
#include "flexamg/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace flexamg {

enum class SymKind : std::uint8_t {
    Start,      // G
    State,      // s at a relative depth: 0 is the finest level, depth_std the last flexible one
    L1Smoother, // S^{l1}: GSF | GSB | Jacobi
    HSmoother,  // S^H: GSF | GSB
    Order,      // R: lexicographic | C-F
    WInner,
    WOuter,
    WJacobi,
    Alpha,
};

struct Symbol {
    SymKind kind = SymKind::Start;
    std::uint16_t depth = 0;  // only meaningful for State

    friend bool operator==(const Symbol &, const Symbol &) = default;
};

/// Productions of a State symbol. Not every production exists at every depth.
enum class StateProd : std::uint8_t { L1Relax, HybridRelax, JacobiRelax, Correct, InitialGuess, Restrict, RestrictAndSolve };

/// Derivation tree node. Terminal choices are leaves whose `prod` is the
/// terminal index; State nodes store a StateProd.
struct TreeNode {
    Symbol sym;
    std::uint8_t prod = 0;
    std::vector<TreeNode> kids;

    friend bool operator==(const TreeNode &, const TreeNode &) = default;
};

struct GrammarParams {
    std::size_t n_flex = kDefaultFlexLevels;
    /// Add 0 to the weight terminals.
    bool include_zero_weight = false;
    std::size_t depth_cap = kDefaultDepthCap;
};

class Grammar {
public:
    explicit Grammar(const GrammarParams &params = {});

    const GrammarParams &params() const noexcept { return params_; }
    std::size_t depth_std() const noexcept { return params_.n_flex - 1; }
    const std::vector<double> &weights() const noexcept { return weights_; }

    /// Number of alternatives of a terminal-choice symbol.
    std::size_t terminal_count(SymKind k) const;
    /// State productions available at a depth.
    std::vector<StateProd> productions(std::uint16_t depth) const;
    /// Child symbols of a State production (terminal choices first, state last).
    std::vector<Symbol> rhs(std::uint16_t depth, StateProd p) const;

    /// Height contributed by a node itself. Restrictions count twice so that
    /// tree height bounds the decoded instruction count.
    static std::size_t span(const TreeNode &n);
    static std::size_t span(Symbol s, std::uint8_t prod);
    /// Smallest height of any complete subtree rooted at `s`.
    std::size_t min_height(Symbol s) const;
    std::size_t min_height(std::uint16_t depth, StateProd p) const;

private:
    GrammarParams params_;
    std::vector<double> weights_;
    std::vector<std::size_t> state_min_;
};

/// Height with the Grammar::span weighting.
std::size_t tree_height(const TreeNode &t);
std::size_t tree_size(const TreeNode &t);

/// Throws ValidationError when the tree is not a complete derivation.
void validate_tree(const Grammar &g, const TreeNode &t);

/// Grow-method derivation rooted at `root` fitting in `max_depth`.
TreeNode random_subtree(const Grammar &g, Symbol root, std::size_t max_depth, Rng &rng);
TreeNode random_derivation(const Grammar &g, std::size_t max_depth, Rng &rng);
TreeNode minimal_completion(const Grammar &g, Symbol s);

/// Decoded cycle for a hierarchy whose finest level is `l_top`.
FlexProgram genotype_to_program(const Grammar &g, const TreeNode &tree, std::size_t l_top);
FlexProgram genotype_to_program(const Grammar &g, const TreeNode &tree, const Hierarchy &h);

struct CrossoverResult {
    TreeNode a;
    TreeNode b;
    bool neutral = false;
};

CrossoverResult crossover(const Grammar &g, const TreeNode &a, const TreeNode &b, Rng &rng);
/// `init_depth` bounds the height of a regrown subtree.
TreeNode mutate(const Grammar &g, const TreeNode &t, Rng &rng, std::size_t init_depth = 40);
/// Replace the deepest chain nodes that break the depth cap with their minimal completion.
TreeNode truncate_to_cap(const Grammar &g, TreeNode t);

/// FNV-1a over a preorder encoding of the tree.
std::uint64_t genotype_hash(const TreeNode &t);
/// Compact s-expression form, e.g. (G (s0 L1Relax gsf lex (s0 InitialGuess))).
std::string tree_to_string(const Grammar &g, const TreeNode &t);

struct SearchSpaceEstimate {
    /// (sum_{nu=1..nu_max} m^nu)^(2L)
    double summed = 0.0;
    /// ((m^(nu_max+1) - 1)/(m - 1))^(2L); (nu_max + 1)^(2L) when m = 1.
    double closed_form = 0.0;
    /// m^(2 L nu_max)
    double simplified = 0.0;
};

SearchSpaceEstimate search_space_estimate(std::size_t L, std::size_t m, std::size_t nu_max);

} // namespace flexamg
