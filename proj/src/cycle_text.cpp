#include "flexamg/cycle.hpp"

#include "flexamg/error.hpp"

#include <charconv>
#include <map>
#include <sstream>

namespace flexamg {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string lvl(std::size_t l) { return "L" + std::to_string(l); }

std::string ordering_token(const SmootherSpec &s) {
    if (s.ordering == Ordering::Lex) return "lex";
    return s.cf_reverse ? "fc" : "cf";
}

[[noreturn]] void bad(std::size_t line, const std::string &msg) {
    throw ValidationError("cycle text line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_ws(const std::string &s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

std::size_t parse_level(const std::string &tok, std::size_t line) {
    if (tok.size() < 2 || tok[0] != 'L') bad(line, "expected a level like L3, got '" + tok + "'");
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) bad(line, "bad level '" + tok + "'");
    return v;
}

double parse_number(std::string_view tok, std::size_t line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) bad(line, "bad number '" + std::string(tok) + "'");
    return v;
}

// key=value, returns the value part or nullopt when the key differs.
std::optional<std::string_view> keyed(std::string_view tok, std::string_view key) {
    if (tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=')
        return tok.substr(key.size() + 1);
    return std::nullopt;
}

} // namespace

std::string program_to_text(const FlexProgram &prog) {
    std::ostringstream out;
    out << "cycle top=" << lvl(prog.l_top) << " std=" << lvl(prog.l_std) << '\n';
    for (const Instruction &in : prog.instrs) {
        switch (in.kind) {
        case InstrKind::Relax: {
            const SmootherSpec &s = in.smoother;
            out << "relax " << lvl(in.level) << ' ' << to_string(s.kind) << ' ' << to_string(s.variant) << ' '
                << ordering_token(s);
            if (s.variant == SmootherVariant::Weighted) {
                if (s.kind == SmootherKind::Jacobi)
                    out << " w=" << fmt(s.omega);
                else
                    out << " wi=" << fmt(s.omega_i) << " wo=" << fmt(s.omega_o);
            }
            break;
        }
        case InstrKind::Restrict: out << "restrict " << lvl(in.level); break;
        case InstrKind::CoarseCorrection: out << "cgc " << lvl(in.level) << " alpha=" << fmt(in.alpha); break;
        case InstrKind::StdVSolve: out << "vsolve " << lvl(in.level); break;
        }
        out << '\n';
    }
    return out.str();
}

FlexProgram program_from_text(std::string_view text) {
    FlexProgram prog;
    bool header = false;
    std::istringstream in{std::string(text)};
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (!header) {
            if (tok.size() != 3 || tok[0] != "cycle") bad(lineno, "expected 'cycle top=L<n> std=L<n>'");
            auto top = keyed(tok[1], "top");
            auto std_ = keyed(tok[2], "std");
            if (!top || !std_) bad(lineno, "expected 'cycle top=L<n> std=L<n>'");
            prog.l_top = parse_level(std::string(*top), lineno);
            prog.l_std = parse_level(std::string(*std_), lineno);
            header = true;
            continue;
        }
        const std::string &op = tok[0];
        if (op == "relax") {
            if (tok.size() < 5) bad(lineno, "relax needs level, kind, variant and ordering");
            SmootherSpec s;
            auto kind = parse_smoother_kind(tok[2]);
            auto variant = parse_smoother_variant(tok[3]);
            if (!kind) bad(lineno, "unknown smoother '" + tok[2] + "'");
            if (!variant) bad(lineno, "unknown variant '" + tok[3] + "'");
            s.kind = *kind;
            s.variant = *variant;
            if (tok[4] == "lex") {
                s.ordering = Ordering::Lex;
            } else if (tok[4] == "cf" || tok[4] == "fc") {
                s.ordering = Ordering::CF;
                s.cf_reverse = tok[4] == "fc";
            } else {
                bad(lineno, "unknown ordering '" + tok[4] + "'");
            }
            for (std::size_t k = 5; k < tok.size(); ++k) {
                if (auto v = keyed(tok[k], "w")) s.omega = parse_number(*v, lineno);
                else if (auto v = keyed(tok[k], "wi")) s.omega_i = parse_number(*v, lineno);
                else if (auto v = keyed(tok[k], "wo")) s.omega_o = parse_number(*v, lineno);
                else bad(lineno, "unknown relax option '" + tok[k] + "'");
            }
            prog.instrs.push_back(Instruction::relax(parse_level(tok[1], lineno), s));
        } else if (op == "restrict" || op == "vsolve") {
            if (tok.size() != 2) bad(lineno, op + " takes exactly one level");
            const std::size_t l = parse_level(tok[1], lineno);
            prog.instrs.push_back(op == "restrict" ? Instruction::restrict_from(l) : Instruction::vsolve(l));
        } else if (op == "cgc") {
            if (tok.size() < 2 || tok.size() > 3) bad(lineno, "cgc takes a level and an optional alpha");
            double alpha = 1.0;
            if (tok.size() == 3) {
                auto v = keyed(tok[2], "alpha");
                if (!v) bad(lineno, "expected alpha=<value>");
                alpha = parse_number(*v, lineno);
            }
            prog.instrs.push_back(Instruction::correct(parse_level(tok[1], lineno), alpha));
        } else {
            bad(lineno, "unknown instruction '" + op + "'");
        }
    }
    if (!header) throw ValidationError("cycle text: missing header line");
    return prog;
}

std::string program_to_dot(const FlexProgram &prog, std::string_view name) {
    static const std::map<SmootherKind, const char *> colour{
        {SmootherKind::Jacobi, "lightskyblue"},
        {SmootherKind::GSF, "palegreen"},
        {SmootherKind::GSB, "lightsalmon"},
        {SmootherKind::GSS, "khaki"},
    };
    std::ostringstream out;
    out << "digraph \"" << name << "\" {\n  node [style=filled, fontname=Helvetica];\n";
    std::map<std::size_t, std::vector<std::size_t>> by_level;
    std::size_t cur = prog.l_top;
    out << "  start [label=\"" << lvl(prog.l_top) << "\", shape=point];\n";
    for (std::size_t k = 0; k < prog.instrs.size(); ++k) {
        const Instruction &in = prog.instrs[k];
        std::string label;
        std::string fill = "white";
        std::string shape = "circle";
        switch (in.kind) {
        case InstrKind::Relax:
            label = std::string(to_string(in.smoother.kind)) + "\\n" + std::string(to_string(in.smoother.variant)) +
                    " " + ordering_token(in.smoother);
            fill = colour.at(in.smoother.kind);
            shape = "box";
            cur = in.level;
            break;
        case InstrKind::Restrict:
            label = "R";
            cur = in.level - 1;
            break;
        case InstrKind::CoarseCorrection:
            label = "P a=" + fmt(in.alpha);
            cur = in.level;
            break;
        case InstrKind::StdVSolve:
            label = "V";
            fill = "gray80";
            shape = "doublecircle";
            cur = in.level;
            break;
        }
        by_level[cur].push_back(k);
        out << "  n" << k << " [label=\"" << label << "\", shape=" << shape << ", fillcolor=\"" << fill
            << "\"];\n";
        out << "  " << (k == 0 ? std::string("start") : "n" + std::to_string(k - 1)) << " -> n" << k << ";\n";
    }
    // Finest level on top: one rank per level, chained by invisible edges.
    for (auto it = by_level.rbegin(); it != by_level.rend(); ++it) {
        out << "  lvl" << it->first << " [label=\"" << lvl(it->first) << "\", shape=plaintext, style=\"\"];\n";
        out << "  { rank=same; lvl" << it->first;
        for (std::size_t k : it->second) out << "; n" << k;
        out << "; }\n";
    }
    for (auto it = by_level.rbegin(); it != by_level.rend(); ++it) {
        auto next = std::next(it);
        if (next != by_level.rend()) out << "  lvl" << it->first << " -> lvl" << next->first << " [style=invis];\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace flexamg
