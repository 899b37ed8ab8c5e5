// Command-line front end for the belief-function toolkit: generate
// populations from factored models, push populations through destructive
// processes, learn structure, fit factors, and run the two reasoning
// engines side by side.
//
// Exit codes: 0 success, 2 validation error, 3 total conflict or population
// annihilation, 4 I/O or parse error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bft/bft.hpp"

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bft::io_error("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw bft::io_error("cannot open '" + path + "' for writing");
    return out;
}

bft::Population load_population(const std::string& path) {
    auto in = open_input(path);
    return bft::parse_population(in);
}

bft::ParsedModel load_model(const std::string& path) {
    auto in = open_input(path);
    return bft::parse_model(in);
}

bft::FramePtr model_frame(const bft::ParsedModel& model) {
    return std::holds_alternative<bft::BeliefNetwork>(model) ? std::get<bft::BeliefNetwork>(model).frame
                                                             : std::get<bft::HypergraphModel>(model).frame;
}

std::vector<std::vector<std::string>> parse_targets(const std::vector<std::string>& specs) {
    std::vector<std::vector<std::string>> targets;
    for (const auto& spec : specs) {
        std::vector<std::string> names;
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
            while (!tok.empty() && tok.back() == ' ') tok.pop_back();
            if (!tok.empty()) names.push_back(tok);
        }
        if (names.empty()) throw bft::validation_error("empty target list '" + spec + "'");
        targets.push_back(std::move(names));
    }
    return targets;
}

// Parse a DAG file: optional frame block (checked against the population's
// frame) plus `edge X -> Y` lines.
std::vector<std::vector<std::size_t>> parse_dag_file(const std::string& path, const bft::FramePtr& frame) {
    auto in = open_input(path);
    std::vector<std::vector<std::size_t>> parents(frame->var_count());
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view s = raw;
        auto hash = s.find('#');
        if (hash != std::string_view::npos) s = s.substr(0, hash);
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        if (s.empty()) continue;
        if (s.substr(0, 4) == "var ") continue; // informational; names checked via edges
        if (s.substr(0, 5) != "edge ") throw bft::parse_error(lineno, "expected 'edge X -> Y'");
        s.remove_prefix(5);
        auto arrow = s.find("->");
        if (arrow == std::string_view::npos) throw bft::parse_error(lineno, "expected 'edge X -> Y'");
        std::string from(s.substr(0, arrow));
        std::string to(s.substr(arrow + 2));
        auto trim = [](std::string& t) {
            while (!t.empty() && t.front() == ' ') t.erase(t.begin());
            while (!t.empty() && t.back() == ' ') t.pop_back();
        };
        trim(from);
        trim(to);
        try {
            parents[frame->var_index(to)].push_back(frame->var_index(from));
        } catch (const bft::frame_error& e) {
            throw bft::parse_error(lineno, e.what());
        }
    }
    for (auto& p : parents) std::sort(p.begin(), p.end());
    return parents;
}

void write_reason_file(const std::string& out_path, const std::vector<std::vector<std::string>>& targets,
                       const std::vector<bft::Bpa>& marginals) {
    std::vector<bft::ReasonSection> sections;
    for (std::size_t i = 0; i < targets.size(); ++i) sections.push_back({targets[i], marginals[i]});
    if (out_path == "-") {
        bft::write_reason_output(std::cout, sections);
    } else {
        auto out = open_output(out_path);
        bft::write_reason_output(out, sections);
    }
}

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool seed_set = false;
    double alpha = 0.05;
    std::size_t lattice_cap = bft::kDefaultLatticeCap;
    double tolerance = bft::kMassTol;
};

void require_seed(const GlobalOpts& g, const char* why) {
    if (!g.seed_set)
        throw bft::validation_error(std::string("--seed is required: ") + why +
                                    " draws random numbers and implicit entropy is not allowed");
}

int run(int argc, char** argv) {
    CLI::App app{"Belief-function toolkit: models, populations, learning, reasoning"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--seed", g.seed, "RNG seed (mandatory for stochastic commands)")
        ->each([&g](const std::string&) { g.seed_set = true; });
    app.add_option("--alpha", g.alpha, "significance level for independence tests")->capture_default_str();
    app.add_option("--lattice-cap", g.lattice_cap,
                   "max frame configurations for exact full-lattice transforms")
        ->capture_default_str();
    app.add_option("--tolerance", g.tolerance, "match threshold used by 'compare'")->capture_default_str();

    // generate
    auto* gen = app.add_subcommand("generate", "sample a labeled population from a model file");
    std::string gen_model, gen_out;
    std::size_t gen_attempts = 0;
    bool gen_keep_signed = false;
    gen->add_option("--model", gen_model, "model file")->required();
    gen->add_option("--attempts,-n", gen_attempts, "generation passes to run")->required();
    gen->add_option("--out", gen_out, "population file to write")->required();
    gen->add_flag("--keep-signed", gen_keep_signed, "skip sign cancellation (inspection only)");
    gen->callback([&] {
        require_seed(g, "generate");
        bft::ParsedModel model = load_model(gen_model);
        if (gen_attempts == 0) {
            bft::Population empty;
            empty.frame = model_frame(model);
            empty.provenance = "generated n=0 seed=" + std::to_string(g.seed);
            auto out = open_output(gen_out);
            bft::write_population(out, empty);
            bft::write_sample_stats(std::cout, bft::SampleStats{}, g.seed);
            std::cerr << "warning: zero attempts requested; wrote an empty population\n";
            return;
        }
        bft::SampleResult res = [&] {
            if (std::holds_alternative<bft::BeliefNetwork>(model))
                return bft::sample_network(std::get<bft::BeliefNetwork>(model), gen_attempts, g.seed,
                                           !gen_keep_signed);
            const auto& hyper = std::get<bft::HypergraphModel>(model);
            bool signed_model = false;
            for (const auto& f : hyper.factors) signed_model = signed_model || f.has_negative_mass();
            if (signed_model) return bft::sample_signed(hyper, gen_attempts, g.seed, !gen_keep_signed,
                                                        g.lattice_cap);
            return bft::sample_hypergraph(hyper, gen_attempts, g.seed);
        }();
        res.population.provenance =
            "generated from " + gen_model + " attempts=" + std::to_string(gen_attempts) +
            " seed=" + std::to_string(g.seed);
        auto out = open_output(gen_out);
        bft::write_population(out, res.population);
        bft::write_sample_stats(std::cout, res.stats, g.seed);
    });

    // process
    auto* proc = app.add_subcommand("process", "apply one destructive process to a population");
    std::string proc_pop, proc_set, proc_file, proc_mode = "random", proc_out;
    proc->add_option("--pop", proc_pop, "population file")->required();
    proc->add_option("--set", proc_set, "deterministic constraint set expression");
    proc->add_option("--proc", proc_file, "evidence file with one block: nondeterministic process");
    proc->add_option("--mode", proc_mode, "nondeterministic handling: random or expected")
        ->check(CLI::IsMember({"random", "expected"}))
        ->capture_default_str();
    proc->add_option("--out", proc_out, "population file to write")->required();
    proc->callback([&] {
        bft::Population pop = load_population(proc_pop);
        if (proc_set.empty() == proc_file.empty())
            throw bft::validation_error("process needs exactly one of --set or --proc");
        bft::Population result = [&] {
            if (!proc_set.empty()) {
                bft::ConfigSet b = bft::parse_set(proc_set, pop.frame, 0);
                return bft::apply_deterministic_process(pop, b);
            }
            auto in = open_input(proc_file);
            bft::Evidence ev = bft::parse_evidence(in, pop.frame);
            if (ev.constraints.size() != 1)
                throw bft::validation_error("--proc file must contain exactly one evidence block");
            if (proc_mode == "expected") return bft::expected_counts(pop, ev.constraints[0]);
            require_seed(g, "process --mode random");
            return bft::apply_random_process(pop, ev.constraints[0], g.seed);
        }();
        result.provenance = pop.provenance.empty() ? "processed" : pop.provenance + "; processed";
        auto out = open_output(proc_out);
        bft::write_population(out, result);
    });

    // learn
    auto* learn = app.add_subcommand("learn", "recover an undirected skeleton from a population");
    std::string learn_pop, learn_out;
    std::size_t learn_max_cond = 3;
    double learn_min_per_cell = 5.0;
    learn->add_option("--pop", learn_pop, "population file")->required();
    learn->add_option("--max-cond", learn_max_cond, "largest conditioning set size")->capture_default_str();
    learn->add_option("--min-per-cell", learn_min_per_cell, "required samples per χ² cell")
        ->capture_default_str();
    learn->add_option("--out", learn_out, "skeleton + test log file to write")->required();
    learn->callback([&] {
        bft::Population pop = load_population(learn_pop);
        bft::CiOptions opts;
        opts.min_samples_per_cell = learn_min_per_cell;
        opts.lattice_cap = g.lattice_cap;
        bft::Skeleton sk = bft::learn_skeleton(pop, g.alpha, learn_max_cond, opts);
        auto out = open_output(learn_out);
        bft::write_skeleton(out, sk);
        std::cout << "edges = " << sk.edges.size() << "\n"
                  << "tests = " << sk.log.size() << "\n";
    });

    // fit
    auto* fit = app.add_subcommand("fit", "fit network factors for a fixed DAG from a population");
    std::string fit_pop, fit_dag, fit_out;
    fit->add_option("--pop", fit_pop, "population file")->required();
    fit->add_option("--dag", fit_dag, "DAG file with 'edge X -> Y' lines")->required();
    fit->add_option("--out", fit_out, "model file to write")->required();
    fit->callback([&] {
        bft::Population pop = load_population(fit_pop);
        auto parents = parse_dag_file(fit_dag, pop.frame);
        bft::BeliefNetwork net = bft::fit_factors(pop, std::move(parents), g.lattice_cap);
        auto out = open_output(fit_out);
        bft::write_model(out, net);
    });

    // reason-model
    auto* rmodel = app.add_subcommand("reason-model", "conditional marginals from a model plus evidence");
    std::string rm_model, rm_evidence, rm_out = "-";
    std::vector<std::string> rm_targets;
    rmodel->add_option("--model", rm_model, "model file")->required();
    rmodel->add_option("--evidence", rm_evidence, "evidence file (omit for prior marginals)");
    rmodel->add_option("--target", rm_targets, "target scope, comma-separated variables (repeatable)")
        ->required();
    rmodel->add_option("--out", rm_out, "output file, '-' for stdout")->capture_default_str();
    rmodel->callback([&] {
        bft::ParsedModel model = load_model(rm_model);
        bft::FramePtr frame = model_frame(model);
        bft::Evidence ev;
        if (!rm_evidence.empty()) {
            auto in = open_input(rm_evidence);
            ev = bft::parse_evidence(in, frame);
        }
        auto targets = parse_targets(rm_targets);
        bft::Bpa joint = std::holds_alternative<bft::BeliefNetwork>(model)
                             ? bft::joint_from_model(std::get<bft::BeliefNetwork>(model))
                             : bft::joint_from_model(std::get<bft::HypergraphModel>(model));
        write_reason_file(rm_out, targets, bft::reason_model(joint, ev, targets));
    });

    // reason-data
    auto* rdata = app.add_subcommand("reason-data", "conditional marginals from a population plus evidence");
    std::string rd_pop, rd_evidence, rd_mode = "analytic", rd_out = "-";
    std::vector<std::string> rd_targets;
    rdata->add_option("--pop", rd_pop, "population file")->required();
    rdata->add_option("--evidence", rd_evidence, "evidence file (omit for prior marginals)");
    rdata->add_option("--target", rd_targets, "target scope, comma-separated variables (repeatable)")
        ->required();
    rdata->add_option("--mode", rd_mode, "nondeterministic evidence handling")
        ->check(CLI::IsMember({"analytic", "montecarlo"}))
        ->capture_default_str();
    rdata->add_option("--out", rd_out, "output file, '-' for stdout")->capture_default_str();
    rdata->callback([&] {
        bft::Population pop = load_population(rd_pop);
        bft::Evidence ev;
        if (!rd_evidence.empty()) {
            auto in = open_input(rd_evidence);
            ev = bft::parse_evidence(in, pop.frame);
        }
        auto targets = parse_targets(rd_targets);
        bft::DataEngineMode mode = bft::DataEngineMode::analytic;
        if (rd_mode == "montecarlo") {
            bool needs_draws = false;
            for (const auto& c : ev.constraints) needs_draws = needs_draws || !bft::Evidence::is_deterministic(c);
            if (needs_draws) require_seed(g, "reason-data --mode montecarlo");
            mode = bft::DataEngineMode::monte_carlo;
        }
        write_reason_file(rd_out, targets, bft::reason_data(pop, ev, targets, mode, g.seed));
    });

    // compare
    auto* cmp = app.add_subcommand("compare", "diff two reasoning outputs");
    std::string cmp_left, cmp_right;
    cmp->add_option("--left", cmp_left, "first reasoning output file")->required();
    cmp->add_option("--right", cmp_right, "second reasoning output file")->required();
    cmp->callback([&] {
        auto lin = open_input(cmp_left);
        auto rin = open_input(cmp_right);
        auto lsec = bft::parse_reason_output(lin);
        auto rsec = bft::parse_reason_output(rin);
        if (lsec.size() != rsec.size())
            throw bft::validation_error("outputs have different target section counts");
        double worst = 0;
        for (std::size_t i = 0; i < lsec.size(); ++i) {
            if (lsec[i].target != rsec[i].target)
                throw bft::validation_error("target section " + std::to_string(i) + " scopes differ");
            bft::CompareReport r = bft::compare_bels(lsec[i].marginal, rsec[i].marginal, g.lattice_cap);
            worst = std::max(worst, r.max_bel_diff);
            std::cout << "target ";
            for (std::size_t k = 0; k < lsec[i].target.size(); ++k)
                std::cout << (k ? "," : "") << lsec[i].target[k];
            std::cout << " : max_bel_diff = " << bft::format_double(r.max_bel_diff)
                      << " ; mean_bel_diff = " << bft::format_double(r.mean_bel_diff)
                      << " ; mass_l1 = " << bft::format_double(r.mass_l1) << " ; sets = " << r.sets_compared
                      << (r.exact ? "" : " ; inexact") << "\n";
        }
        std::cout << (worst <= g.tolerance ? "MATCH" : "DIFFER") << " at tolerance "
                  << bft::format_double(g.tolerance) << "\n";
    });

    // validate
    auto* val = app.add_subcommand("validate", "check a model or population file");
    std::string val_model, val_pop;
    val->add_option("--model", val_model, "model file");
    val->add_option("--pop", val_pop, "population file");
    val->callback([&] {
        if (val_model.empty() == val_pop.empty())
            throw bft::validation_error("validate needs exactly one of --model or --pop");
        if (!val_model.empty()) {
            bft::ParsedModel model = load_model(val_model);
            bft::ModelReport report;
            const std::vector<bft::Bpa>* factors;
            if (std::holds_alternative<bft::BeliefNetwork>(model)) {
                const auto& net = std::get<bft::BeliefNetwork>(model);
                report = bft::validate_model(net, nullptr, g.lattice_cap);
                factors = &net.factors;
                std::cout << "kind = network\n";
            } else {
                const auto& hyper = std::get<bft::HypergraphModel>(model);
                report = bft::validate_model(hyper, g.lattice_cap);
                factors = &hyper.factors;
                std::cout << "kind = hypergraph\n";
            }
            for (std::size_t i = 0; i < factors->size(); ++i) {
                bft::ValidationReport r = bft::validate((*factors)[i], g.lattice_cap);
                std::cout << "factor " << i << " : class = " << bft::to_string(r.tag)
                          << " ; sum_abs = " << bft::format_double(r.sum_abs)
                          << " ; min_bel = " << bft::format_double(r.min_bel)
                          << " ; min_q = " << bft::format_double(r.min_q) << (r.exact ? "" : " ; inexact")
                          << "\n";
            }
            for (const auto& issue : report.issues) std::cout << "issue: " << issue << "\n";
            std::cout << (report.ok ? "ok" : "invalid") << "\n";
            if (!report.ok) throw bft::validation_error("model failed validation");
        } else {
            bft::Population pop = load_population(val_pop);
            std::cout << "objects = " << pop.size() << "\n"
                      << "total_weight = " << bft::format_double(pop.total_abs_weight()) << "\n"
                      << "net_weight = " << bft::format_double(pop.total_signed_weight()) << "\n";
            if (!pop.objects.empty()) {
                bft::ValidationReport r = bft::validate(bft::empirical_bpa(pop), g.lattice_cap);
                std::cout << "empirical_class = " << bft::to_string(r.tag) << "\n";
            }
            std::cout << "ok\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const bft::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const bft::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const bft::conflict_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const bft::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
