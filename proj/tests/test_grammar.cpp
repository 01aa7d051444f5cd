#include "grammar_support.hpp"
#include "support.hpp"

#include "flexamg/error.hpp"
#include "flexamg/grammar.hpp"
#include "flexamg/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace flexamg;
using testsupport::chain_tree;
using testsupport::Step;
using testsupport::v_steps;

namespace {

bool same(const Vector &a, const Vector &b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace

TEST_CASE("weight terminals") {
    Grammar g;
    REQUIRE(g.weights().size() == 37);
    CHECK(g.weights().front() == doctest::Approx(0.1));
    CHECK(g.weights()[18] == 1.0);
    CHECK(g.weights().back() == doctest::Approx(1.9));
    for (std::size_t i = 1; i < g.weights().size(); ++i)
        CHECK(g.weights()[i] - g.weights()[i - 1] == doctest::Approx(0.05));
    GrammarParams p;
    p.include_zero_weight = true;
    Grammar gz(p);
    CHECK(gz.weights().size() == 38);
    CHECK(gz.weights().front() == 0.0);
    CHECK(gz.terminal_count(SymKind::Alpha) == 38);
}

TEST_CASE("productions per depth") {
    Grammar g;
    CHECK(g.depth_std() == 4);
    CHECK(g.productions(0).size() == 5);
    CHECK(g.productions(2).size() == 5);
    CHECK(g.productions(4) == std::vector<StateProd>{StateProd::RestrictAndSolve});
    CHECK_THROWS_AS(g.productions(5), ValidationError);
    CHECK(g.min_height(Symbol{SymKind::State, 0}) == 1);
    CHECK(g.min_height(Symbol{SymKind::State, 3}) == 7);
    CHECK(g.min_height(Symbol{SymKind::State, 4}) == 9);
    CHECK(g.min_height(Symbol{SymKind::Start, 0}) == 2);
    GrammarParams bad;
    bad.n_flex = 1;
    CHECK_THROWS_AS(Grammar{bad}, ValidationError);
    bad.n_flex = 5;
    bad.depth_cap = 3;
    CHECK_THROWS_AS(Grammar{bad}, ValidationError);
}

TEST_CASE("minimal completions reach their minimal height") {
    Grammar g;
    for (std::uint16_t d = 0; d <= g.depth_std(); ++d) {
        const TreeNode t = minimal_completion(g, {SymKind::State, d});
        CHECK(tree_height(t) == g.min_height(Symbol{SymKind::State, d}));
    }
    const TreeNode root = minimal_completion(g, {SymKind::Start, 0});
    validate_tree(g, root);
    // An empty program leaves the iterate untouched.
    CHECK(genotype_to_program(g, root, 9).instrs.empty());
}

TEST_CASE("random derivations are valid and decode to valid programs") {
    Grammar g;
    Rng rng(11);
    std::size_t max_height = 0;
    for (int i = 0; i < 10000; ++i) {
        const TreeNode t = random_derivation(g, 40, rng);
        validate_tree(g, t);
        CHECK(tree_height(t) <= 40);
        max_height = std::max(max_height, tree_height(t));
        const std::size_t L = rng.index(13);
        const FlexProgram p = genotype_to_program(g, t, L);
        CHECK_NOTHROW(validate_program(p, L + 1));
        // Every instruction costs at least one unit of height.
        CHECK(p.instrs.size() <= tree_height(t));
    }
    CHECK(max_height > 10);
}

TEST_CASE("crossover and mutation are closed under the grammar") {
    GrammarParams params;
    params.depth_cap = 60;
    Grammar g(params);
    Rng rng(5);
    std::vector<TreeNode> pool;
    for (int i = 0; i < 64; ++i) pool.push_back(random_derivation(g, 40, rng));
    std::size_t neutral = 0;
    for (int i = 0; i < 10000; ++i) {
        const TreeNode &a = pool[rng.index(pool.size())];
        const TreeNode &b = pool[rng.index(pool.size())];
        CrossoverResult c = crossover(g, a, b, rng);
        validate_tree(g, c.a);
        validate_tree(g, c.b);
        if (c.neutral) {
            ++neutral;
            CHECK(genotype_hash(c.a) == genotype_hash(a));
        }
        TreeNode m = mutate(g, c.a, rng);
        validate_tree(g, m);
        const std::size_t L = 1 + rng.index(10);
        CHECK_NOTHROW(validate_program(genotype_to_program(g, m, L), L + 1));
        CHECK_NOTHROW(validate_program(genotype_to_program(g, c.b, L), L + 1));
        pool[rng.index(pool.size())] = rng.index(2) ? std::move(m) : std::move(c.b);
    }
    CHECK(neutral < 10000);
}

TEST_CASE("crossover without truncation conserves nodes") {
    Grammar g;
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const TreeNode a = random_derivation(g, 30, rng);
        const TreeNode b = random_derivation(g, 30, rng);
        const CrossoverResult c = crossover(g, a, b, rng);
        CHECK(tree_size(c.a) + tree_size(c.b) == tree_size(a) + tree_size(b));
    }
}

TEST_CASE("leaf mutation picks a different terminal") {
    Grammar g;
    const TreeNode t = chain_tree(g, {{StateProd::JacobiRelax, {10, 0}}});
    Rng rng(3);
    int changed = 0;
    for (int i = 0; i < 200; ++i) {
        const TreeNode m = mutate(g, t, rng);
        validate_tree(g, m);
        if (genotype_hash(m) != genotype_hash(t)) ++changed;
    }
    // Leaf picks always change; only a regrown subtree can coincide.
    CHECK(changed > 100);
}

TEST_CASE("decoding a Jacobi-only genotype") {
    Grammar g;
    const TreeNode t = chain_tree(g, {{StateProd::JacobiRelax, {14, 0}}});
    const FlexProgram p = genotype_to_program(g, t, 9);
    CHECK(p.l_top == 9);
    CHECK(p.l_std == 5);
    REQUIRE(p.instrs.size() == 1);
    CHECK(p.instrs[0].kind == InstrKind::Relax);
    CHECK(p.instrs[0].level == 9);
    CHECK(p.instrs[0].smoother.kind == SmootherKind::Jacobi);
    CHECK(p.instrs[0].smoother.variant == SmootherVariant::Weighted);
    CHECK(p.instrs[0].smoother.omega == doctest::Approx(0.8));
    CHECK(p.instrs[0].smoother.ordering == Ordering::Lex);
}

TEST_CASE("decoding a hand-built cycle") {
    Grammar g;
    // hybrid CF relax, one restriction, relax, back up with alpha 1.15
    const TreeNode t = chain_tree(g, {{StateProd::HybridRelax, {1, 20, 16, 1}},
                                      {StateProd::Restrict, {}},
                                      {StateProd::L1Relax, {2, 0}},
                                      {StateProd::Correct, {21}}});
    const FlexProgram p = genotype_to_program(g, t, 9);
    REQUIRE(p.instrs.size() == 4);
    CHECK(p.instrs[0].smoother.kind == SmootherKind::GSB);
    CHECK(p.instrs[0].smoother.ordering == Ordering::CF);
    CHECK(p.instrs[0].smoother.omega_i == doctest::Approx(1.1));
    CHECK(p.instrs[0].smoother.omega_o == doctest::Approx(0.9));
    CHECK(p.instrs[1] == Instruction::restrict_from(9));
    CHECK(p.instrs[2].level == 8);
    CHECK(p.instrs[2].smoother.kind == SmootherKind::Jacobi);
    CHECK(p.instrs[2].smoother.variant == SmootherVariant::L1);
    CHECK(p.instrs[3].kind == InstrKind::CoarseCorrection);
    CHECK(p.instrs[3].level == 9);
    CHECK(p.instrs[3].alpha == doctest::Approx(1.15));
    const std::string dsl = program_to_text(p);
    CHECK(program_from_text(dsl) == p);
}

TEST_CASE("the V-shaped genotype reproduces the standard V-cycle") {
    Grammar g;
    const TreeNode t = chain_tree(g, v_steps(g));
    validate_tree(g, t);
    for (std::size_t nd : {6, 10, 16}) {
        const Hierarchy h = build_hierarchy(build_anisotropic_poisson({1e-3, 1.0, 1.0, nd}));
        const FlexProgram p = genotype_to_program(g, t, h);
        validate_program(p, h);
        const Vector b = random_vector(h.levels.back().A.nrows(), 2);
        const Vector x0 = random_vector(b.size(), 3);
        CHECK(same(execute_cycle(p, h, x0, b), standard_v_cycle(h, h.top(), x0, b)));
    }
}

TEST_CASE("steps inside the standard region are dropped") {
    Grammar g;
    // L = 2 gives l_std = 1, so depth 1 is already in the standard region.
    const TreeNode t = chain_tree(g, {{StateProd::L1Relax, {0, 0}},
                                      {StateProd::Restrict, {}},
                                      {StateProd::L1Relax, {0, 0}},
                                      {StateProd::Restrict, {}},
                                      {StateProd::Correct, {18}},
                                      {StateProd::Correct, {18}},
                                      {StateProd::L1Relax, {1, 0}}});
    const FlexProgram p = genotype_to_program(g, t, 2);
    CHECK(p.l_std == 1);
    REQUIRE(p.instrs.size() == 5);
    CHECK(p.instrs[1] == Instruction::restrict_from(2));
    CHECK(p.instrs[2] == Instruction::vsolve(1));
    CHECK(p.instrs[3].kind == InstrKind::CoarseCorrection);
    CHECK(p.instrs[3].level == 2);
    validate_program(p, 3);
    // A single level hierarchy is a direct solve regardless of the genotype.
    const FlexProgram one = genotype_to_program(g, t, 0);
    CHECK(one.instrs == std::vector<Instruction>{Instruction::vsolve(0)});
}

TEST_CASE("derivation is deterministic for a seed and hashes separate trees") {
    Grammar g;
    Rng r1(42), r2(42);
    std::set<std::uint64_t> hashes;
    std::set<std::string> texts;
    for (int i = 0; i < 300; ++i) {
        const TreeNode a = random_derivation(g, 40, r1);
        const TreeNode b = random_derivation(g, 40, r2);
        CHECK(genotype_hash(a) == genotype_hash(b));
        CHECK(tree_to_string(g, a) == tree_to_string(g, b));
        hashes.insert(genotype_hash(a));
        texts.insert(tree_to_string(g, a));
    }
    CHECK(hashes.size() == texts.size());
}

TEST_CASE("truncation restores the depth cap") {
    GrammarParams params;
    params.depth_cap = 20;
    Grammar g(params);
    Grammar wide;
    Rng rng(17);
    for (int i = 0; i < 300; ++i) {
        const TreeNode t = random_derivation(wide, 80, rng);
        const TreeNode c = truncate_to_cap(g, t);
        validate_tree(g, c);
        if (tree_height(t) <= 20) CHECK(genotype_hash(c) == genotype_hash(t));
    }
}

TEST_CASE("invalid trees are rejected") {
    Grammar g;
    TreeNode t = chain_tree(g, {{StateProd::JacobiRelax, {14, 0}}});
    TreeNode bad = t;
    bad.kids[0].kids[0].prod = 200;
    CHECK_THROWS_AS(validate_tree(g, bad), ValidationError);
    bad = t;
    bad.kids[0].prod = static_cast<std::uint8_t>(StateProd::Restrict);
    CHECK_THROWS_AS(validate_tree(g, bad), ValidationError);
    CHECK_THROWS_AS(validate_tree(g, t.kids[0]), ValidationError);
    Rng rng(1);
    CHECK_THROWS_AS(random_subtree(g, {SymKind::State, 4}, 8, rng), ValidationError);
}

TEST_CASE("search space size") {
    const SearchSpaceEstimate big = search_space_estimate(5, 6, 3);
    CHECK(big.simplified == doctest::Approx(std::pow(6.0, 30)));
    CHECK(big.simplified == doctest::Approx(2.21e23).epsilon(0.01));
    CHECK(big.summed == doctest::Approx(std::pow(258.0, 10)));
    CHECK(big.closed_form == doctest::Approx(std::pow(259.0, 10)));
    const SearchSpaceEstimate small = search_space_estimate(1, 2, 1);
    CHECK(small.summed == 4.0);
    CHECK(small.simplified == 4.0);
    CHECK(search_space_estimate(2, 1, 3).closed_form == doctest::Approx(256.0));
    CHECK_THROWS_AS(search_space_estimate(0, 2, 1), ValidationError);
}
