#include "flexamg/grammar.hpp"

#include "flexamg/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>

namespace flexamg {

Grammar::Grammar(const GrammarParams &params) : params_(params) {
    if (params_.n_flex < 2) throw ValidationError("grammar needs at least two flexible levels");
    if (params_.n_flex > 1000) throw ValidationError("grammar: too many flexible levels");
    if (params_.include_zero_weight) weights_.push_back(0.0);
    for (int k = 2; k <= 38; ++k) weights_.push_back(k / 20.0);
    state_min_.resize(params_.n_flex);
    state_min_[0] = 1;
    for (std::size_t d = 1; d < params_.n_flex; ++d) state_min_[d] = 2 + state_min_[d - 1];
    if (params_.depth_cap < min_height(Symbol{SymKind::Start, 0}) + state_min_.back())
        throw ValidationError("grammar: depth cap too small for " + std::to_string(params_.n_flex) +
                              " flexible levels");
}

std::size_t Grammar::terminal_count(SymKind k) const {
    switch (k) {
    case SymKind::L1Smoother: return 3;
    case SymKind::HSmoother: return 2;
    case SymKind::Order: return 2;
    case SymKind::WInner:
    case SymKind::WOuter:
    case SymKind::WJacobi:
    case SymKind::Alpha: return weights_.size();
    default: return 0;
    }
}

std::vector<StateProd> Grammar::productions(std::uint16_t depth) const {
    if (depth > depth_std()) throw ValidationError("state depth beyond the flexible levels");
    if (depth == depth_std()) return {StateProd::RestrictAndSolve};
    if (depth == 0)
        return {StateProd::L1Relax, StateProd::HybridRelax, StateProd::JacobiRelax, StateProd::Correct,
                StateProd::InitialGuess};
    return {StateProd::L1Relax, StateProd::HybridRelax, StateProd::JacobiRelax, StateProd::Restrict,
            StateProd::Correct};
}

std::vector<Symbol> Grammar::rhs(std::uint16_t depth, StateProd p) const {
    const Symbol self{SymKind::State, depth};
    switch (p) {
    case StateProd::L1Relax: return {{SymKind::L1Smoother, 0}, {SymKind::Order, 0}, self};
    case StateProd::HybridRelax:
        return {{SymKind::HSmoother, 0}, {SymKind::WInner, 0}, {SymKind::WOuter, 0}, {SymKind::Order, 0}, self};
    case StateProd::JacobiRelax: return {{SymKind::WJacobi, 0}, {SymKind::Order, 0}, self};
    case StateProd::Correct: return {{SymKind::Alpha, 0}, {SymKind::State, static_cast<std::uint16_t>(depth + 1)}};
    case StateProd::InitialGuess: return {};
    case StateProd::Restrict:
    case StateProd::RestrictAndSolve: return {{SymKind::State, static_cast<std::uint16_t>(depth - 1)}};
    }
    return {};
}

std::size_t Grammar::span(Symbol s, std::uint8_t prod) {
    if (s.kind != SymKind::State) return 1;
    const auto p = static_cast<StateProd>(prod);
    return p == StateProd::Restrict || p == StateProd::RestrictAndSolve ? 2 : 1;
}

std::size_t Grammar::span(const TreeNode &n) { return span(n.sym, n.prod); }

std::size_t Grammar::min_height(Symbol s) const {
    switch (s.kind) {
    case SymKind::Start: return 1 + state_min_[0];
    case SymKind::State: return state_min_.at(s.depth);
    default: return 1;
    }
}

std::size_t Grammar::min_height(std::uint16_t depth, StateProd p) const {
    std::size_t kids = 0;
    for (const Symbol &s : rhs(depth, p)) kids = std::max(kids, min_height(s));
    return span(Symbol{SymKind::State, depth}, static_cast<std::uint8_t>(p)) + kids;
}

std::size_t tree_height(const TreeNode &t) {
    std::size_t kids = 0;
    for (const TreeNode &k : t.kids) kids = std::max(kids, tree_height(k));
    return Grammar::span(t) + kids;
}

std::size_t tree_size(const TreeNode &t) {
    std::size_t n = 1;
    for (const TreeNode &k : t.kids) n += tree_size(k);
    return n;
}

namespace {

bool is_terminal_choice(SymKind k) { return k != SymKind::Start && k != SymKind::State; }

void check_node(const Grammar &g, const TreeNode &t) {
    if (is_terminal_choice(t.sym.kind)) {
        if (!t.kids.empty()) throw ValidationError("tree: terminal choice with children");
        if (t.prod >= g.terminal_count(t.sym.kind)) throw ValidationError("tree: terminal index out of range");
        return;
    }
    if (t.sym.kind == SymKind::Start) {
        if (t.kids.size() != 1 || !(t.kids[0].sym == Symbol{SymKind::State, 0}))
            throw ValidationError("tree: start symbol must derive the finest state");
        check_node(g, t.kids[0]);
        return;
    }
    const auto prods = g.productions(t.sym.depth);
    const auto p = static_cast<StateProd>(t.prod);
    if (std::find(prods.begin(), prods.end(), p) == prods.end())
        throw ValidationError("tree: production not available at state depth " + std::to_string(t.sym.depth));
    const auto want = g.rhs(t.sym.depth, p);
    if (want.size() != t.kids.size()) throw ValidationError("tree: arity mismatch");
    for (std::size_t i = 0; i < want.size(); ++i) {
        if (!(want[i] == t.kids[i].sym)) throw ValidationError("tree: child symbol mismatch");
        check_node(g, t.kids[i]);
    }
}

} // namespace

void validate_tree(const Grammar &g, const TreeNode &t) {
    if (t.sym.kind != SymKind::Start) throw ValidationError("tree: root is not the start symbol");
    check_node(g, t);
    if (tree_height(t) > g.params().depth_cap)
        throw ValidationError("tree: height " + std::to_string(tree_height(t)) + " exceeds the cap");
}

TreeNode random_subtree(const Grammar &g, Symbol root, std::size_t max_depth, Rng &rng) {
    if (max_depth < g.min_height(root))
        throw ValidationError("random_subtree: depth budget below the minimal completion height");
    TreeNode n;
    n.sym = root;
    if (is_terminal_choice(root.kind)) {
        n.prod = static_cast<std::uint8_t>(rng.index(g.terminal_count(root.kind)));
        return n;
    }
    if (root.kind == SymKind::Start) {
        n.kids.push_back(random_subtree(g, Symbol{SymKind::State, 0}, max_depth - 1, rng));
        return n;
    }
    std::vector<StateProd> fits;
    for (StateProd p : g.productions(root.depth))
        if (g.min_height(root.depth, p) <= max_depth) fits.push_back(p);
    const StateProd p = fits[rng.index(fits.size())];
    n.prod = static_cast<std::uint8_t>(p);
    const std::size_t budget = max_depth - Grammar::span(root, n.prod);
    for (const Symbol &s : g.rhs(root.depth, p)) n.kids.push_back(random_subtree(g, s, budget, rng));
    return n;
}

TreeNode random_derivation(const Grammar &g, std::size_t max_depth, Rng &rng) {
    return random_subtree(g, Symbol{SymKind::Start, 0}, std::min(max_depth, g.params().depth_cap), rng);
}

TreeNode minimal_completion(const Grammar &g, Symbol s) {
    TreeNode n;
    n.sym = s;
    if (is_terminal_choice(s.kind)) return n;
    if (s.kind == SymKind::Start) {
        n.kids.push_back(minimal_completion(g, Symbol{SymKind::State, 0}));
        return n;
    }
    StateProd p = StateProd::InitialGuess;
    if (s.depth == g.depth_std())
        p = StateProd::RestrictAndSolve;
    else if (s.depth > 0)
        p = StateProd::Restrict;
    n.prod = static_cast<std::uint8_t>(p);
    for (const Symbol &k : g.rhs(s.depth, p)) n.kids.push_back(minimal_completion(g, k));
    return n;
}

FlexProgram genotype_to_program(const Grammar &g, const TreeNode &tree, std::size_t l_top) {
    FlexProgram prog;
    prog.l_top = l_top;
    prog.l_std = standard_cutoff(l_top, g.params().n_flex);
    if (l_top == 0) {
        prog.instrs.push_back(Instruction::vsolve(0));
        return prog;
    }
    if (tree.sym.kind != SymKind::Start || tree.kids.size() != 1) throw ValidationError("genotype: bad root");
    // The grammar names the state reached after each step, so the chain from
    // the root runs backwards in time.
    std::vector<const TreeNode *> chain;
    for (const TreeNode *n = &tree.kids[0];;) {
        chain.push_back(n);
        if (n->kids.empty()) break;
        n = &n->kids.back();
    }
    std::reverse(chain.begin(), chain.end());
    const auto &w = g.weights();
    const std::size_t flex_depths = l_top - prog.l_std;  // depths 0..flex_depths-1 map to real levels
    auto collapsed = [&](std::size_t d) { return d >= flex_depths; };
    auto level = [&](std::size_t d) { return l_top - d; };
    for (const TreeNode *n : chain) {
        const std::size_t d = n->sym.depth;
        const auto p = static_cast<StateProd>(n->prod);
        switch (p) {
        case StateProd::InitialGuess: break;
        case StateProd::L1Relax:
        case StateProd::HybridRelax:
        case StateProd::JacobiRelax: {
            if (collapsed(d)) break;
            SmootherSpec s;
            s.ordering = n->kids[n->kids.size() - 2].prod == 1 ? Ordering::CF : Ordering::Lex;
            if (p == StateProd::L1Relax) {
                static constexpr SmootherKind kinds[] = {SmootherKind::GSF, SmootherKind::GSB, SmootherKind::Jacobi};
                s.kind = kinds[n->kids[0].prod];
                s.variant = SmootherVariant::L1;
            } else if (p == StateProd::HybridRelax) {
                s.kind = n->kids[0].prod == 0 ? SmootherKind::GSF : SmootherKind::GSB;
                s.variant = SmootherVariant::Weighted;
                s.omega_i = w[n->kids[1].prod];
                s.omega_o = w[n->kids[2].prod];
            } else {
                s.kind = SmootherKind::Jacobi;
                s.variant = SmootherVariant::Weighted;
                s.omega = w[n->kids[0].prod];
            }
            prog.instrs.push_back(Instruction::relax(level(d), s));
            break;
        }
        case StateProd::Restrict:
        case StateProd::RestrictAndSolve:
            // Arriving at depth d from d-1.
            if (!collapsed(d)) {
                prog.instrs.push_back(Instruction::restrict_from(level(d - 1)));
            } else if (!collapsed(d - 1)) {
                prog.instrs.push_back(Instruction::restrict_from(prog.l_std + 1));
                prog.instrs.push_back(Instruction::vsolve(prog.l_std));
            }
            break;
        case StateProd::Correct:
            // Arriving at depth d from d+1.
            if (!collapsed(d)) prog.instrs.push_back(Instruction::correct(level(d), w[n->kids[0].prod]));
            break;
        }
    }
    return prog;
}

FlexProgram genotype_to_program(const Grammar &g, const TreeNode &tree, const Hierarchy &h) {
    return genotype_to_program(g, tree, h.top());
}

namespace {

struct NodeRef {
    TreeNode *node;
    std::size_t above;  // height used by ancestors
};

void collect(TreeNode &n, std::size_t above, std::vector<NodeRef> &out) {
    out.push_back({&n, above});
    const std::size_t next = above + Grammar::span(n);
    for (TreeNode &k : n.kids) collect(k, next, out);
}

void fit(const Grammar &g, TreeNode &n, std::size_t budget) {
    if (tree_height(n) <= budget) return;
    if (n.sym.kind == SymKind::Start) {
        fit(g, n.kids[0], budget - 1);
        return;
    }
    const auto p = static_cast<StateProd>(n.prod);
    if (n.sym.kind != SymKind::State || g.min_height(n.sym.depth, p) > budget) {
        n = minimal_completion(g, n.sym);
        return;
    }
    const std::size_t child = budget - Grammar::span(n);
    for (TreeNode &k : n.kids) fit(g, k, child);
}

} // namespace

TreeNode truncate_to_cap(const Grammar &g, TreeNode t) {
    fit(g, t, g.params().depth_cap);
    return t;
}

CrossoverResult crossover(const Grammar &g, const TreeNode &a, const TreeNode &b, Rng &rng) {
    CrossoverResult out{a, b, false};
    std::vector<NodeRef> na, nb;
    collect(out.a, 0, na);
    collect(out.b, 0, nb);
    TreeNode *pa = na[rng.index(na.size())].node;
    std::vector<TreeNode *> match;
    for (const NodeRef &r : nb)
        if (r.node->sym == pa->sym) match.push_back(r.node);
    if (match.empty()) {
        out.neutral = true;
        return out;
    }
    TreeNode *pb = match[rng.index(match.size())];
    std::swap(*pa, *pb);
    out.a = truncate_to_cap(g, std::move(out.a));
    out.b = truncate_to_cap(g, std::move(out.b));
    return out;
}

TreeNode mutate(const Grammar &g, const TreeNode &t, Rng &rng, std::size_t init_depth) {
    TreeNode out = t;
    std::vector<NodeRef> nodes;
    collect(out, 0, nodes);
    const NodeRef pick = nodes[rng.index(nodes.size())];
    TreeNode &n = *pick.node;
    if (is_terminal_choice(n.sym.kind)) {
        const std::size_t count = g.terminal_count(n.sym.kind);
        if (count > 1) {
            // A different terminal, uniformly.
            std::size_t v = rng.index(count - 1);
            if (v >= n.prod) ++v;
            n.prod = static_cast<std::uint8_t>(v);
        }
        return out;
    }
    const std::size_t room = g.params().depth_cap - pick.above;
    std::size_t budget = std::min(room, init_depth);
    if (budget < g.min_height(n.sym)) budget = room;
    n = random_subtree(g, n.sym, budget, rng);
    return out;
}

std::uint64_t genotype_hash(const TreeNode &t) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto byte = [&h](std::uint8_t b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    std::function<void(const TreeNode &)> walk = [&](const TreeNode &n) {
        byte(static_cast<std::uint8_t>(n.sym.kind));
        byte(static_cast<std::uint8_t>(n.sym.depth & 0xff));
        byte(static_cast<std::uint8_t>(n.sym.depth >> 8));
        byte(n.prod);
        byte(static_cast<std::uint8_t>(n.kids.size()));
        for (const TreeNode &k : n.kids) walk(k);
    };
    walk(t);
    return h;
}

namespace {

std::string fmt_weight(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_tree(const Grammar &g, const TreeNode &n, std::string &out) {
    switch (n.sym.kind) {
    case SymKind::L1Smoother: out += std::array<const char *, 3>{"gsf", "gsb", "jacobi"}[n.prod]; return;
    case SymKind::HSmoother: out += n.prod == 0 ? "gsf" : "gsb"; return;
    case SymKind::Order: out += n.prod == 0 ? "lex" : "cf"; return;
    case SymKind::WInner: out += "wi=" + fmt_weight(g.weights()[n.prod]); return;
    case SymKind::WOuter: out += "wo=" + fmt_weight(g.weights()[n.prod]); return;
    case SymKind::WJacobi: out += "w=" + fmt_weight(g.weights()[n.prod]); return;
    case SymKind::Alpha: out += "alpha=" + fmt_weight(g.weights()[n.prod]); return;
    case SymKind::Start: out += "(G"; break;
    case SymKind::State: {
        static constexpr const char *names[] = {"L1Relax", "HybridRelax", "JacobiRelax", "Correct",
                                                "InitialGuess", "Restrict", "RestrictAndSolve"};
        out += "(s" + std::to_string(n.sym.depth) + " " + names[n.prod];
        break;
    }
    }
    for (const TreeNode &k : n.kids) {
        out += ' ';
        write_tree(g, k, out);
    }
    out += ')';
}

} // namespace

std::string tree_to_string(const Grammar &g, const TreeNode &t) {
    std::string out;
    write_tree(g, t, out);
    return out;
}

SearchSpaceEstimate search_space_estimate(std::size_t L, std::size_t m, std::size_t nu_max) {
    if (L == 0 || m == 0 || nu_max == 0) throw ValidationError("search_space_estimate: arguments must be positive");
    const double md = static_cast<double>(m), e = 2.0 * static_cast<double>(L);
    double sum = 0.0;
    for (std::size_t nu = 1; nu <= nu_max; ++nu) sum += std::pow(md, static_cast<double>(nu));
    SearchSpaceEstimate s;
    s.summed = std::pow(sum, e);
    s.closed_form = m == 1 ? std::pow(static_cast<double>(nu_max + 1), e)
                           : std::pow((std::pow(md, static_cast<double>(nu_max + 1)) - 1.0) / (md - 1.0), e);
    s.simplified = std::pow(md, e * static_cast<double>(nu_max));
    return s;
}

} // namespace flexamg
