#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bft/bpa.hpp"
#include "bft/error.hpp"
#include "bft/frame.hpp"
#include "bft/learning.hpp"
#include "bft/netmodel.hpp"
#include "bft/population.hpp"
#include "bft/reasoning.hpp"
#include "bft/sampling.hpp"

// Line-oriented text formats.  All numbers go through to_chars/from_chars:
// locale-independent, shortest round-trip form, so rewriting a parsed file
// reproduces it byte for byte.

namespace bft {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace iodetail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::string_view strip_comment(std::string_view s) {
    auto pos = s.find('#');
    if (pos != std::string_view::npos) s = s.substr(0, pos);
    return trim(s);
}

inline std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == delim) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline bool consume_prefix(std::string_view& s, std::string_view prefix) {
    if (s.substr(0, prefix.size()) != prefix) return false;
    s.remove_prefix(prefix.size());
    s = trim(s);
    return true;
}

inline double parse_double(std::string_view s, std::size_t line) {
    double v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw parse_error(line, "expected a number, got '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line) {
    std::uint64_t v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw parse_error(line, "expected a nonnegative integer, got '" + std::string(s) + "'");
    return v;
}

// Identifiers (variable names, value labels) must survive the format's
// structural characters.
inline void check_token(std::string_view s, const char* what) {
    if (s.empty()) throw io_error(std::string(what) + " is empty");
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#' || c == ':' || c == ',' ||
            c == ';' || c == '=' || c == '{' || c == '}' || c == '|' || c == '&' || c == '*' || c == '>')
            throw io_error(std::string(what) + " '" + std::string(s) + "' contains a reserved character");
}

struct Line {
    std::size_t no;
    std::string raw;
};

inline std::vector<Line> read_lines(std::istream& in) {
    std::vector<Line> lines;
    std::string s;
    std::size_t no = 0;
    while (std::getline(in, s)) lines.push_back({++no, std::move(s)});
    if (in.bad()) throw io_error("read failure");
    return lines;
}

} // namespace iodetail

// Set expression: `*` is the full frame; otherwise terms `X={a,b} & Y={c}`
// joined by `|`.  Unmentioned variables are unrestricted.
inline std::string print_set(const ConfigSet& s) {
    if (s.is_full()) return "*";
    if (s.empty()) throw io_error("cannot print the empty set");
    CylinderExpr expr = to_cylinder_expr(s);
    std::string out;
    for (std::size_t t = 0; t < expr.terms.size(); ++t) {
        if (t) out += " | ";
        const auto& term = expr.terms[t];
        for (std::size_t k = 0; k < term.restrictions.size(); ++k) {
            if (k) out += " & ";
            out += term.restrictions[k].first;
            out += "={";
            const auto& labels = term.restrictions[k].second;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (i) out += ",";
                out += labels[i];
            }
            out += "}";
        }
    }
    return out;
}

inline ConfigSet parse_set(std::string_view text, const FramePtr& frame, std::size_t line) {
    using namespace iodetail;
    text = trim(text);
    if (text == "*") return ConfigSet::full_set(frame);
    CylinderExpr expr;
    for (auto term_text : split(text, '|')) {
        if (term_text.empty()) throw parse_error(line, "empty term in set expression");
        CylinderTerm term;
        for (auto restr : split(term_text, '&')) {
            auto eq = restr.find('=');
            if (eq == std::string_view::npos)
                throw parse_error(line, "expected NAME={...} in set expression, got '" + std::string(restr) + "'");
            std::string_view name = trim(restr.substr(0, eq));
            std::string_view vals = trim(restr.substr(eq + 1));
            if (vals.size() < 2 || vals.front() != '{' || vals.back() != '}')
                throw parse_error(line, "expected value set in braces after '" + std::string(name) + "='");
            vals = vals.substr(1, vals.size() - 2);
            std::vector<std::string> labels;
            for (auto v : split(vals, ',')) {
                if (v.empty()) throw parse_error(line, "empty value label for '" + std::string(name) + "'");
                labels.emplace_back(v);
            }
            term.restrictions.emplace_back(std::string(name), std::move(labels));
        }
        expr.terms.push_back(std::move(term));
    }
    try {
        return expr.denote(frame);
    } catch (const frame_error& e) {
        throw parse_error(line, e.what());
    }
}

inline void write_frame(std::ostream& os, const Frame& frame) {
    for (const auto& v : frame.variables()) {
        iodetail::check_token(v.name, "variable name");
        os << "var " << v.name << " : ";
        for (std::size_t i = 0; i < v.domain.size(); ++i) {
            iodetail::check_token(v.domain[i], "value label");
            if (i) os << ",";
            os << v.domain[i];
        }
        os << "\n";
    }
}

// `bpa`/`evidence` block: header `<keyword> over X,Y`, then one line per
// focal element: `<mass> : <set expression>`.
inline void write_bpa_block(std::ostream& os, const Bpa& m, const char* keyword = "bpa") {
    os << keyword << " over ";
    const auto& vars = m.frame()->variables();
    for (std::size_t i = 0; i < vars.size(); ++i) {
        if (i) os << ",";
        os << vars[i].name;
    }
    os << "\n";
    for (const auto& [set, mass] : m.focals())
        os << format_double(mass) << " : " << print_set(set) << "\n";
}

namespace iodetail {

inline std::vector<std::string> parse_name_list(std::string_view s, std::size_t line) {
    std::vector<std::string> names;
    for (auto n : split(s, ',')) {
        if (n.empty()) throw parse_error(line, "empty name in list");
        names.emplace_back(n);
    }
    if (names.empty()) throw parse_error(line, "expected a list of variable names");
    return names;
}

inline Variable parse_var_line(std::string_view rest, std::size_t line) {
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw parse_error(line, "expected 'var NAME : v1,v2,...'");
    Variable v;
    v.name = std::string(trim(rest.substr(0, colon)));
    if (v.name.empty()) throw parse_error(line, "variable name is empty");
    for (auto lb : split(rest.substr(colon + 1), ',')) {
        if (lb.empty()) throw parse_error(line, "empty value label in 'var " + v.name + "'");
        v.domain.emplace_back(lb);
    }
    return v;
}

// Focal lines of one block, starting at index i (header already consumed).
inline FocalMap parse_focal_lines(const std::vector<Line>& lines, std::size_t& i, const FramePtr& frame) {
    FocalMap masses;
    bool saw_any = false;
    while (i < lines.size()) {
        std::string_view s = strip_comment(lines[i].raw);
        if (s.empty()) {
            ++i;
            continue;
        }
        // A new section starts with a keyword; focal lines start with a number.
        if (s.substr(0, 4) == "var " || s.substr(0, 5) == "edge " || s.substr(0, 4) == "bpa " ||
            s.substr(0, 9) == "evidence " || s.substr(0, 7) == "target " || s.substr(0, 6) == "table ")
            break;
        auto colon = s.find(':');
        if (colon == std::string_view::npos)
            throw parse_error(lines[i].no, "expected '<mass> : <set expression>'");
        double mass = parse_double(trim(s.substr(0, colon)), lines[i].no);
        ConfigSet set = parse_set(s.substr(colon + 1), frame, lines[i].no);
        if (set.empty()) throw parse_error(lines[i].no, "focal element denotes the empty set");
        if (masses.count(set)) throw parse_error(lines[i].no, "duplicate focal element");
        masses.emplace(std::move(set), mass);
        saw_any = true;
        ++i;
    }
    if (!saw_any) throw parse_error(i < lines.size() ? lines[i].no : lines.back().no + 1,
                                    "block has no focal elements");
    return masses;
}

} // namespace iodetail

// ---------------------------------------------------------------------------
// Population file: frame block, then one record per line:
//   <weight> ; <+|-> ; attr = <set> ; label = <set>
// A `# provenance:` comment is restored on parse.

inline void write_population(std::ostream& os, const Population& pop) {
    if (!pop.provenance.empty()) os << "# provenance: " << pop.provenance << "\n";
    write_frame(os, *pop.frame);
    for (const auto& o : pop.objects) {
        os << format_double(o.weight) << " ; " << (o.sign == Sign::minus ? '-' : '+') << " ; attr = "
           << print_set(o.attribute) << " ; label = " << print_set(o.label) << "\n";
    }
}

inline Population parse_population(std::istream& in) {
    using namespace iodetail;
    auto lines = read_lines(in);
    Population pop;
    std::vector<Variable> vars;
    std::size_t i = 0;
    for (; i < lines.size(); ++i) {
        std::string_view raw = lines[i].raw;
        if (trim(raw).substr(0, 13) == "# provenance:") {
            pop.provenance = std::string(trim(trim(raw).substr(13)));
            continue;
        }
        std::string_view s = strip_comment(raw);
        if (s.empty()) continue;
        if (consume_prefix(s, "var ")) {
            if (pop.frame) throw parse_error(lines[i].no, "variable declared after records");
            vars.push_back(parse_var_line(s, lines[i].no));
            continue;
        }
        if (!pop.frame) {
            if (vars.empty()) throw parse_error(lines[i].no, "record before any variable declaration");
            pop.frame = Frame::make(vars);
        }
        auto parts = split(s, ';');
        if (parts.size() != 4)
            throw parse_error(lines[i].no, "expected '<weight> ; <sign> ; attr = <set> ; label = <set>'");
        LabeledObject o;
        o.weight = parse_double(parts[0], lines[i].no);
        if (parts[1] == "+")
            o.sign = Sign::plus;
        else if (parts[1] == "-")
            o.sign = Sign::minus;
        else
            throw parse_error(lines[i].no, "sign must be '+' or '-'");
        std::string_view attr = parts[2];
        std::string_view label = parts[3];
        if (!consume_prefix(attr, "attr")) throw parse_error(lines[i].no, "third field must be 'attr = <set>'");
        if (!consume_prefix(attr, "=")) throw parse_error(lines[i].no, "expected '=' after 'attr'");
        if (!consume_prefix(label, "label")) throw parse_error(lines[i].no, "fourth field must be 'label = <set>'");
        if (!consume_prefix(label, "=")) throw parse_error(lines[i].no, "expected '=' after 'label'");
        o.attribute = parse_set(attr, pop.frame, lines[i].no);
        o.label = parse_set(label, pop.frame, lines[i].no);
        try {
            pop.push(std::move(o));
        } catch (const validation_error& e) {
            throw parse_error(lines[i].no, e.what());
        }
    }
    if (!pop.frame) {
        if (vars.empty()) throw parse_error(1, "population file declares no variables");
        pop.frame = Frame::make(vars); // frame-only file: an empty population
    }
    return pop;
}

// ---------------------------------------------------------------------------
// Model file: frame block, optional `edge X -> Y` lines (their presence makes
// the model a network), then one `bpa over ...` block per factor.

using ParsedModel = std::variant<HypergraphModel, BeliefNetwork>;

inline void write_model(std::ostream& os, const HypergraphModel& model) {
    write_frame(os, *model.frame);
    for (const auto& f : model.factors) {
        os << "\n";
        write_bpa_block(os, f);
    }
}

inline void write_model(std::ostream& os, const BeliefNetwork& net) {
    write_frame(os, *net.frame);
    for (std::size_t i = 0; i < net.parents.size(); ++i)
        for (auto p : net.parents[i])
            os << "edge " << net.frame->variable(p).name << " -> " << net.frame->variable(i).name << "\n";
    for (const auto& f : net.factors) {
        os << "\n";
        write_bpa_block(os, f);
    }
}

inline void write_model(std::ostream& os, const ParsedModel& model) {
    if (std::holds_alternative<BeliefNetwork>(model))
        write_model(os, std::get<BeliefNetwork>(model));
    else
        write_model(os, std::get<HypergraphModel>(model));
}

inline ParsedModel parse_model(std::istream& in) {
    using namespace iodetail;
    auto lines = read_lines(in);
    std::vector<Variable> vars;
    std::vector<std::pair<std::string, std::string>> edges;
    FramePtr frame;
    struct Block {
        std::vector<std::string> scope;
        FocalMap masses;
        std::size_t line;
    };
    std::vector<Block> blocks;
    std::size_t i = 0;
    while (i < lines.size()) {
        std::string_view s = strip_comment(lines[i].raw);
        if (s.empty()) {
            ++i;
            continue;
        }
        if (consume_prefix(s, "var ")) {
            if (frame) throw parse_error(lines[i].no, "variable declared after factor blocks");
            vars.push_back(parse_var_line(s, lines[i].no));
            ++i;
            continue;
        }
        if (consume_prefix(s, "edge ")) {
            if (frame) throw parse_error(lines[i].no, "edge declared after factor blocks");
            auto arrow = s.find("->");
            if (arrow == std::string_view::npos) throw parse_error(lines[i].no, "expected 'edge X -> Y'");
            std::string from(trim(s.substr(0, arrow)));
            std::string to(trim(s.substr(arrow + 2)));
            if (from.empty() || to.empty()) throw parse_error(lines[i].no, "expected 'edge X -> Y'");
            edges.emplace_back(std::move(from), std::move(to));
            ++i;
            continue;
        }
        if (consume_prefix(s, "bpa over ")) {
            if (!frame) {
                if (vars.empty()) throw parse_error(lines[i].no, "factor block before any variable declaration");
                frame = Frame::make(vars);
            }
            Block b;
            b.line = lines[i].no;
            b.scope = parse_name_list(s, lines[i].no);
            ++i;
            b.masses = parse_focal_lines(lines, i, frame->subframe(b.scope));
            blocks.push_back(std::move(b));
            continue;
        }
        throw parse_error(lines[i].no, "unexpected line in model file");
    }
    if (!frame) {
        if (vars.empty()) throw parse_error(1, "model file declares no variables");
        frame = Frame::make(vars);
    }
    if (blocks.empty()) throw parse_error(lines.empty() ? 1 : lines.back().no, "model file has no factors");

    std::vector<Bpa> factors;
    factors.reserve(blocks.size());
    for (auto& b : blocks) {
        try {
            factors.push_back(Bpa::from_masses(frame->subframe(b.scope), std::move(b.masses)));
        } catch (const validation_error& e) {
            throw parse_error(b.line, e.what());
        }
    }

    if (edges.empty()) {
        HypergraphModel model;
        model.frame = frame;
        model.factors = std::move(factors);
        return model;
    }

    BeliefNetwork net;
    net.frame = frame;
    net.parents.assign(frame->var_count(), {});
    for (const auto& [from, to] : edges) {
        std::size_t f = frame->var_index(from);
        std::size_t t = frame->var_index(to);
        net.parents[t].push_back(f);
    }
    for (auto& p : net.parents) {
        std::sort(p.begin(), p.end());
        if (std::adjacent_find(p.begin(), p.end()) != p.end())
            throw validation_error("duplicate edge in model file");
    }
    // Assign each factor to the node whose scope it carries.
    std::vector<int> factor_of(frame->var_count(), -1);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        std::vector<std::string> got = blocks[k].scope;
        std::sort(got.begin(), got.end());
        bool matched = false;
        for (std::size_t nidx = 0; nidx < frame->var_count(); ++nidx) {
            std::vector<std::string> want = net.scope_names(nidx);
            std::sort(want.begin(), want.end());
            if (want == got) {
                if (factor_of[nidx] != -1)
                    throw parse_error(blocks[k].line, "two factors share the scope of variable '" +
                                                          frame->variable(nidx).name + "'");
                factor_of[nidx] = static_cast<int>(k);
                matched = true;
                break;
            }
        }
        if (!matched)
            throw parse_error(blocks[k].line, "factor scope matches no node's {variable} ∪ parents set");
    }
    for (std::size_t nidx = 0; nidx < frame->var_count(); ++nidx) {
        if (factor_of[nidx] == -1)
            throw validation_error("no factor declared for variable '" + frame->variable(nidx).name + "'");
        net.factors.push_back(factors[static_cast<std::size_t>(factor_of[nidx])]);
    }
    return net;
}

// ---------------------------------------------------------------------------
// Evidence file: ordered `evidence over ...` blocks, resolved against the
// frame they will be applied to.

inline void write_evidence(std::ostream& os, const Evidence& evidence) {
    for (std::size_t k = 0; k < evidence.constraints.size(); ++k) {
        if (k) os << "\n";
        write_bpa_block(os, evidence.constraints[k], "evidence");
    }
}

inline Evidence parse_evidence(std::istream& in, const FramePtr& frame) {
    using namespace iodetail;
    auto lines = read_lines(in);
    Evidence ev;
    std::size_t i = 0;
    while (i < lines.size()) {
        std::string_view s = strip_comment(lines[i].raw);
        if (s.empty()) {
            ++i;
            continue;
        }
        if (!consume_prefix(s, "evidence over "))
            throw parse_error(lines[i].no, "expected 'evidence over <vars>'");
        std::size_t header_line = lines[i].no;
        auto scope = parse_name_list(s, lines[i].no);
        ++i;
        FramePtr sub;
        try {
            sub = frame->subframe(scope);
        } catch (const frame_error& e) {
            throw parse_error(header_line, e.what());
        }
        FocalMap masses = parse_focal_lines(lines, i, sub);
        try {
            ev.constraints.push_back(Bpa::from_masses(sub, std::move(masses)));
        } catch (const validation_error& e) {
            throw parse_error(header_line, e.what());
        }
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Reasoning output: per target, a `target` header, the scope's frame block,
// the marginal as a reparseable bpa block, and a display table
// `<set> ; <bel> ; <pl> ; <q>` over the marginal's focal elements.

struct ReasonSection {
    std::vector<std::string> target;
    Bpa marginal;
};

inline void write_reason_output(std::ostream& os, const std::vector<ReasonSection>& sections) {
    for (std::size_t k = 0; k < sections.size(); ++k) {
        const auto& sec = sections[k];
        if (k) os << "\n";
        os << "target ";
        for (std::size_t i = 0; i < sec.target.size(); ++i) {
            if (i) os << ",";
            os << sec.target[i];
        }
        os << "\n";
        write_frame(os, *sec.marginal.frame());
        write_bpa_block(os, sec.marginal);
        os << "table over ";
        const auto& vars = sec.marginal.frame()->variables();
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (i) os << ",";
            os << vars[i].name;
        }
        os << "\n";
        std::vector<ConfigSet> queries;
        for (const auto& [set, m] : sec.marginal.focals()) queries.push_back(set);
        MeasureTable table = derive_measures(sec.marginal, queries);
        for (const auto& row : table.rows)
            os << print_set(row.set) << " ; " << format_double(row.bel) << " ; " << format_double(row.pl)
               << " ; " << format_double(row.q) << "\n";
    }
}

inline std::vector<ReasonSection> parse_reason_output(std::istream& in) {
    using namespace iodetail;
    auto lines = read_lines(in);
    std::vector<ReasonSection> out;
    std::size_t i = 0;
    while (i < lines.size()) {
        std::string_view s = strip_comment(lines[i].raw);
        if (s.empty()) {
            ++i;
            continue;
        }
        if (!consume_prefix(s, "target "))
            throw parse_error(lines[i].no, "expected 'target <vars>'");
        std::vector<std::string> target_names = parse_name_list(s, lines[i].no);
        ++i;
        std::vector<Variable> vars;
        while (i < lines.size()) {
            std::string_view t = strip_comment(lines[i].raw);
            if (t.empty()) {
                ++i;
                continue;
            }
            if (consume_prefix(t, "var ")) {
                vars.push_back(parse_var_line(t, lines[i].no));
                ++i;
                continue;
            }
            break;
        }
        if (vars.empty()) throw parse_error(i < lines.size() ? lines[i].no : lines.back().no,
                                            "target section has no frame block");
        FramePtr frame = Frame::make(vars);
        if (i >= lines.size()) throw parse_error(lines.back().no, "target section has no bpa block");
        std::string_view hdr = strip_comment(lines[i].raw);
        if (!consume_prefix(hdr, "bpa over "))
            throw parse_error(lines[i].no, "expected 'bpa over <vars>' in target section");
        ++i;
        FocalMap masses = parse_focal_lines(lines, i, frame);
        std::optional<Bpa> marginal;
        try {
            marginal = Bpa::from_masses(frame, std::move(masses));
        } catch (const validation_error& e) {
            throw parse_error(lines[i - 1].no, e.what());
        }
        // Skip the display table up to the next target section.
        if (i < lines.size()) {
            std::string_view t = strip_comment(lines[i].raw);
            if (consume_prefix(t, "table over ")) {
                ++i;
                while (i < lines.size()) {
                    std::string_view row = strip_comment(lines[i].raw);
                    if (!row.empty() && row.substr(0, 7) == "target ") break;
                    ++i;
                }
            }
        }
        out.push_back({std::move(target_names), std::move(*marginal)});
    }
    if (out.empty()) throw parse_error(1, "reasoning output has no target sections");
    return out;
}

// ---------------------------------------------------------------------------
// Skeleton output: `edge X -- Y` per retained edge, sepsets for removed
// edges, then one `test` line per CI invocation.

inline void write_skeleton(std::ostream& os, const Skeleton& sk) {
    os << "# skeleton: " << sk.edges.size() << " edges\n";
    for (const auto& [i, j] : sk.edges)
        os << "edge " << sk.frame->variable(i).name << " -- " << sk.frame->variable(j).name << "\n";
    for (const auto& [ij, z] : sk.sepsets) {
        os << "# separated: " << sk.frame->variable(ij.first).name << " -- "
           << sk.frame->variable(ij.second).name << " by ";
        if (z.empty())
            os << "-";
        else
            for (std::size_t k = 0; k < z.size(); ++k) os << (k ? "," : "") << z[k];
        os << "\n";
    }
    os << "# tests\n";
    for (const auto& e : sk.log) {
        os << "test " << e.x << " ; " << e.y << " ; ";
        if (e.z.empty())
            os << "-";
        else
            for (std::size_t k = 0; k < e.z.size(); ++k) os << (k ? "," : "") << e.z[k];
        if (e.errored) {
            os << " ; error: " << e.error << "\n";
            continue;
        }
        os << " ; stat=" << format_double(e.result.statistic) << " ; df=" << e.result.df
           << " ; p=" << format_double(e.result.p_value) << " ; crit=" << format_double(e.result.critical)
           << " ; " << (e.result.independent ? "independent" : "dependent");
        if (e.result.flagged) os << " ; flagged: " << e.result.note;
        os << "\n";
    }
}

inline void write_sample_stats(std::ostream& os, const SampleStats& stats, std::uint64_t seed) {
    os << "attempts = " << stats.attempts << "\n"
       << "failures = " << stats.failures << "\n"
       << "yield = " << stats.yield() << "\n"
       << "seed = " << seed << "\n";
}

} // namespace bft
