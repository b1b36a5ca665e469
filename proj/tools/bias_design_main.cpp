// Command-line front end: reads a JSON problem file, dispatches to the
// library, and prints a canonical JSON report (sorted keys, reals at 12
// significant digits) so repeated runs are byte-identical.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bias_design/balance.hpp"
#include "bias_design/causal.hpp"
#include "bias_design/criteria.hpp"
#include "bias_design/design.hpp"
#include "bias_design/errors.hpp"
#include "bias_design/game.hpp"
#include "bias_design/matrix.hpp"

using json = nlohmann::json;
using namespace bias_design;

namespace {

// ---------------------------------------------------------------- reporting

std::string format_real(double v) {
    if (v == 0.0) return "0";  // merges -0 into 0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_canonical(const json& j, std::string& out) {
    switch (j.type()) {
        case json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [key, value] : j.items()) {  // keys are kept sorted
                if (!first) out += ',';
                first = false;
                out += json(key).dump();
                out += ':';
                write_canonical(value, out);
            }
            out += '}';
            break;
        }
        case json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                write_canonical(j[i], out);
            }
            out += ']';
            break;
        }
        case json::value_t::number_float:
            out += format_real(j.get<double>());
            break;
        case json::value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            break;
        case json::value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            break;
        case json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            break;
        case json::value_t::string:
            out += j.dump();
            break;
        default:
            out += "null";
            break;
    }
}

std::string canonical(const json& j) {
    std::string out;
    write_canonical(j, out);
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void emit_report(const std::string& digest, json results, json diagnostics) {
    const json report{{"tool_version", "1.0.0"},
                      {"input_digest", digest},
                      {"results", std::move(results)},
                      {"diagnostics", std::move(diagnostics)}};
    std::cout << canonical(report) << "\n";
}

json matrix_to_json(const numerics::Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ------------------------------------------------------------ problem files

struct Problem {
    json body;
    std::string digest;
};

Problem load_problem(const std::string& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read problem file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    Problem p;
    const std::string bytes = buf.str();
    p.digest = fnv1a_hex(bytes);
    try {
        p.body = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw schema_error(std::string("problem file is not valid JSON: ") + e.what());
    }
    if (!p.body.is_object()) throw schema_error("the problem file must hold a JSON object");
    if (!p.body.contains("kind") || !p.body["kind"].is_string() ||
        p.body["kind"].get<std::string>() != expected_kind) {
        throw schema_error("this command needs a problem with kind '" + expected_kind + "'");
    }
    return p;
}

void check_fields(const json& obj, const std::string& ctx,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!required.count(key) && !optional.count(key)) {
            throw schema_error(ctx + ": unknown field '" + key + "'");
        }
    }
    for (const auto& key : required) {
        if (!obj.contains(key)) throw schema_error(ctx + ": missing field '" + key + "'");
    }
}

double as_real(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw schema_error(ctx + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw schema_error(ctx + " must be finite");
    return x;
}

std::vector<double> as_real_vector(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw schema_error(ctx + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_real(v[i], ctx + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::vector<double>> as_real_rows(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw schema_error(ctx + " must be an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_real_vector(v[i], ctx + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::vector<int>> as_exponents(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw schema_error(ctx + " must be an array of exponent lists");
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const json& term = v[i];
        if (!term.is_array()) throw schema_error(ctx + " entries must be arrays of integers");
        std::vector<int> t;
        for (const auto& e : term) {
            if (!e.is_number_integer()) {
                throw schema_error(ctx + " exponents must be integers");
            }
            t.push_back(e.get<int>());
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::string> as_strings(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw schema_error(ctx + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& s : v) {
        if (!s.is_string()) throw schema_error(ctx + " entries must be strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

numerics::Matrix as_matrix(const json& v, const std::string& ctx) {
    const auto rows = as_real_rows(v, ctx);
    if (rows.empty()) throw schema_error(ctx + " must have at least one row");
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != cols) throw schema_error(ctx + " rows must share one length");
    }
    numerics::Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

// psi may be a single number (only when one bias coordinate exists) or an
// array of length q.
std::vector<double> resolve_psi(const json& v, std::size_t q, const std::string& ctx) {
    if (v.is_number()) {
        if (q != 1) throw schema_error(ctx + " must be an array of length " + std::to_string(q));
        return {as_real(v, ctx)};
    }
    const auto psi = as_real_vector(v, ctx);
    if (psi.size() != q) {
        throw schema_error(ctx + " must have length " + std::to_string(q));
    }
    return psi;
}

// --------------------------------------------------------------- subcommands

struct CommonOpts {
    std::string input;
    double psi = 0.0;
    bool psi_set = false;
};

void cmd_criteria(const CommonOpts& opts) {
    const Problem problem = load_problem(opts.input, "design");
    check_fields(problem.body, "design problem", {"kind", "f", "g", "psi"},
                 {"support", "weights", "family"});
    const design::MonomialBasis f(as_exponents(problem.body["f"], "f"));
    const design::MonomialBasis g(as_exponents(problem.body["g"], "g"));

    const bool has_family = problem.body.contains("family");
    const bool has_support = problem.body.contains("support") || problem.body.contains("weights");
    if (has_family == has_support) {
        throw schema_error("give either 'family' or 'support' plus 'weights'");
    }
    design::DesignMeasure measure = [&] {
        if (has_family) {
            const json& fam = problem.body["family"];
            check_fields(fam, "family", {"alpha", "beta"}, {});
            return design::alpha_beta_measure(design::AlphaBetaFamily::standard(
                as_real(fam["alpha"], "family.alpha"), as_real(fam["beta"], "family.beta")));
        }
        if (!problem.body.contains("support") || !problem.body.contains("weights")) {
            throw schema_error("'support' and 'weights' must be given together");
        }
        const json& support = problem.body["support"];
        if (!support.is_array() || support.empty()) {
            throw schema_error("support must be a nonempty array");
        }
        std::vector<design::Point> points;
        for (std::size_t i = 0; i < support.size(); ++i) {
            const std::string ctx = "support[" + std::to_string(i) + "]";
            if (!support[i].is_object()) throw schema_error(ctx + " must be an object");
            check_fields(support[i], ctx, {"x", "z"}, {});
            points.push_back(design::Point{as_real_vector(support[i]["x"], ctx + ".x"),
                                           as_real_vector(support[i]["z"], ctx + ".z")});
        }
        return design::DesignMeasure(std::move(points),
                                     as_real_vector(problem.body["weights"], "weights"));
    }();

    const auto moment = design::moment_matrix(measure, f, g);
    std::vector<double> psi = resolve_psi(problem.body["psi"], moment.q(), "psi");
    if (opts.psi_set) {
        if (moment.q() != 1) {
            throw parameter_out_of_range("--psi applies only to one-dimensional bias terms");
        }
        psi = {opts.psi};
    }

    const auto mse = criteria::bias_mse(moment, psi);
    const double d_factorized = criteria::d_criterion(moment, psi);
    const double d_direct = numerics::determinant(mse.s1 + mse.s2);
    const auto product = design::product_design_check(measure);

    json results{{"m11", matrix_to_json(moment.m11())},
                 {"m12", matrix_to_json(moment.m12())},
                 {"m22", matrix_to_json(moment.m22())},
                 {"trace_s1", mse.trace_s1},
                 {"trace_s2", mse.trace_s2},
                 {"a_criterion", criteria::a_criterion(mse)},
                 {"d_criterion", json{{"factorized", d_factorized}, {"direct", d_direct}}},
                 {"q1_criterion", criteria::q1_criterion(moment)},
                 {"psi", psi},
                 {"product_design",
                  json{{"support_is_product", product.support_is_product},
                       {"weights_factorize", product.weights_factorize},
                       {"is_product_design",
                        product.support_is_product && product.weights_factorize}}}};
    json diagnostics{{"command", "criteria"},
                     {"support_points", measure.size()},
                     {"p", moment.p()},
                     {"q", moment.q()}};
    emit_report(problem.digest, std::move(results), std::move(diagnostics));
}

design::AlphaBetaFamily family_from(const json& body) {
    design::AlphaBetaFamily family = design::AlphaBetaFamily::standard(0.5, 0.5);
    if (body.contains("points")) {
        const auto rows = as_real_rows(body["points"], "points");
        if (rows.size() != 4) throw schema_error("points must list exactly four [x,z] pairs");
        for (std::size_t i = 0; i < 4; ++i) {
            if (rows[i].size() != 2) {
                throw schema_error("points entries must be [x,z] pairs");
            }
            family.points[i] = design::Point{{rows[i][0]}, {rows[i][1]}};
        }
    }
    return family;
}

int cmd_nash(const CommonOpts& opts, const std::string& starts_arg) {
    const Problem problem = load_problem(opts.input, "game");
    check_fields(problem.body, "game problem", {"kind"}, {"points", "psi", "starts"});
    const design::AlphaBetaFamily family = family_from(problem.body);

    double psi = 1.0;
    if (problem.body.contains("psi")) psi = as_real(problem.body["psi"], "psi");
    if (opts.psi_set) psi = opts.psi;

    std::vector<std::pair<double, double>> starts = game::default_nash_starts();
    if (problem.body.contains("starts")) {
        const auto rows = as_real_rows(problem.body["starts"], "starts");
        starts.clear();
        for (const auto& r : rows) {
            if (r.size() != 2) throw schema_error("starts entries must be [alpha,beta] pairs");
            starts.emplace_back(r[0], r[1]);
        }
    }
    if (!starts_arg.empty()) {
        starts.clear();
        std::stringstream ss(starts_arg);
        std::string pair;
        while (std::getline(ss, pair, ';')) {
            const auto comma = pair.find(',');
            if (comma == std::string::npos) {
                throw schema_error("--starts expects 'alpha,beta' pairs separated by ';'");
            }
            try {
                starts.emplace_back(std::stod(pair.substr(0, comma)),
                                    std::stod(pair.substr(comma + 1)));
            } catch (const std::exception&) {
                throw schema_error("--starts expects 'alpha,beta' pairs separated by ';'");
            }
        }
    }

    const auto report = game::nash_solve(family, psi, starts);
    const auto joint = game::joint_optimum(family, psi);

    json points = json::array();
    json comparison = json::array();
    for (const auto& p : report.points) {
        points.push_back(json{{"alpha", p.alpha},
                              {"beta", p.beta},
                              {"classification", game::to_string(p.classification)},
                              {"trace_s1", p.trace_s1},
                              {"trace_s2", p.trace_s2},
                              {"grad_alice", p.grad_alice},
                              {"grad_bob", p.grad_bob}});
        comparison.push_back(json{{"alpha", p.alpha},
                                  {"beta", p.beta},
                                  {"kind", game::to_string(p.classification)},
                                  {"total", p.trace_s1 + p.trace_s2}});
    }
    comparison.push_back(json{
        {"alpha", joint.alpha}, {"beta", joint.beta}, {"kind", "joint-optimum"},
        {"total", joint.value}});

    json start_rows = json::array();
    for (const auto& d : report.diagnostics) {
        start_rows.push_back(json{{"start_alpha", d.start_alpha},
                                  {"start_beta", d.start_beta},
                                  {"alpha", d.alpha},
                                  {"beta", d.beta},
                                  {"sweeps", d.sweeps},
                                  {"residual", d.residual},
                                  {"converged", d.converged},
                                  {"point_index", d.point_index}});
    }

    json results{{"points", std::move(points)},
                 {"joint_optimum",
                  json{{"alpha", joint.alpha}, {"beta", joint.beta}, {"value", joint.value}}},
                 {"comparison", std::move(comparison)},
                 {"complete", report.complete},
                 {"partial", !report.complete},
                 {"psi", psi}};
    json diagnostics{{"command", "nash"},
                     {"starts", std::move(start_rows)},
                     {"start_count", starts.size()}};
    emit_report(problem.digest, std::move(results), std::move(diagnostics));
    if (!report.complete) {
        std::cerr << "error: no_convergence: some starts did not converge\n";
        return 4;
    }
    return 0;
}

void cmd_backdoor(const CommonOpts& opts) {
    const Problem problem = load_problem(opts.input, "dag");
    check_fields(problem.body, "dag problem", {"kind", "nodes", "edges", "cause", "effect"},
                 {"set"});
    const auto nodes = as_strings(problem.body["nodes"], "nodes");
    std::vector<std::pair<std::string, std::string>> edges;
    if (!problem.body["edges"].is_array()) throw schema_error("edges must be an array");
    for (std::size_t i = 0; i < problem.body["edges"].size(); ++i) {
        const auto e = as_strings(problem.body["edges"][i], "edges[" + std::to_string(i) + "]");
        if (e.size() != 2) throw schema_error("edges entries must be [from,to] pairs");
        edges.emplace_back(e[0], e[1]);
    }
    const causal::Dag dag(nodes, edges);
    if (!problem.body["cause"].is_string() || !problem.body["effect"].is_string()) {
        throw schema_error("cause and effect must be node labels");
    }
    const std::string cause = problem.body["cause"].get<std::string>();
    const std::string effect = problem.body["effect"].get<std::string>();

    json results{{"cause", cause}, {"effect", effect}};
    if (problem.body.contains("set")) {
        const auto labels = as_strings(problem.body["set"], "set");
        const std::set<std::string> s(labels.begin(), labels.end());
        const auto verdict = causal::backdoor_admissible(dag, cause, effect, s);
        results["set"] = json(s);
        results["no_descendant_conditioned"] = verdict.no_descendant_conditioned;
        results["backdoor_paths_blocked"] = verdict.backdoor_paths_blocked;
        results["admissible"] = verdict.admissible;
    } else {
        const auto sets = causal::minimal_backdoor_sets(dag, cause, effect);
        json out = json::array();
        for (const auto& s : sets) out.push_back(json(s));
        results["minimal_sets"] = std::move(out);
    }
    json diagnostics{{"command", "backdoor"},
                     {"node_count", dag.size()},
                     {"edge_count", dag.edges().size()}};
    emit_report(problem.digest, std::move(results), std::move(diagnostics));
}

causal::LinearSem sem_from(const json& body) {
    check_fields(body, "sem problem", {"kind", "nodes", "edges", "noise_scales"},
                 {"intercepts"});
    const auto nodes = as_strings(body["nodes"], "nodes");
    std::vector<std::pair<std::string, std::string>> edges;
    std::map<std::pair<std::string, std::string>, double> coefficients;
    if (!body["edges"].is_array()) throw schema_error("edges must be an array");
    for (std::size_t i = 0; i < body["edges"].size(); ++i) {
        const json& e = body["edges"][i];
        const std::string ctx = "edges[" + std::to_string(i) + "]";
        if (!e.is_object()) throw schema_error(ctx + " must be an object");
        check_fields(e, ctx, {"from", "to", "coefficient"}, {});
        if (!e["from"].is_string() || !e["to"].is_string()) {
            throw schema_error(ctx + " endpoints must be node labels");
        }
        const auto edge = std::make_pair(e["from"].get<std::string>(),
                                         e["to"].get<std::string>());
        edges.push_back(edge);
        coefficients[edge] = as_real(e["coefficient"], ctx + ".coefficient");
    }
    std::map<std::string, double> intercepts;
    if (body.contains("intercepts")) {
        if (!body["intercepts"].is_object()) throw schema_error("intercepts must be an object");
        for (const auto& [node, value] : body["intercepts"].items()) {
            intercepts[node] = as_real(value, "intercepts." + node);
        }
    }
    std::map<std::string, double> noise;
    if (!body["noise_scales"].is_object()) throw schema_error("noise_scales must be an object");
    for (const auto& [node, value] : body["noise_scales"].items()) {
        noise[node] = as_real(value, "noise_scales." + node);
    }
    return causal::LinearSem(causal::Dag(nodes, edges), coefficients, intercepts, noise);
}

void cmd_simulate(const CommonOpts& opts, std::size_t n, std::uint64_t seed,
                  const std::vector<std::string>& do_args,
                  const std::vector<std::string>& fit_args, const std::string& out_path) {
    const Problem problem = load_problem(opts.input, "sem");
    const causal::LinearSem sem = sem_from(problem.body);

    causal::Intervention intervention;
    for (const auto& arg : do_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos) {
            throw schema_error("--do expects NODE=VALUE");
        }
        try {
            intervention.assignments[arg.substr(0, eq)] = std::stod(arg.substr(eq + 1));
        } catch (const std::exception&) {
            throw schema_error("--do expects NODE=VALUE");
        }
    }

    const causal::Dataset data = causal::simulate(sem, n, seed, intervention);
    causal::write_csv(data, out_path);

    json means;
    for (const auto& label : data.columns) {
        double s = 0.0;
        for (double v : data.column(label)) s += v;
        means[label] = s / static_cast<double>(data.rows());
    }
    json results{{"columns", data.columns},
                 {"means", std::move(means)},
                 {"n", n},
                 {"seed", seed},
                 {"csv", out_path}};
    if (!intervention.assignments.empty()) {
        json iv;
        for (const auto& [node, value] : intervention.assignments) iv[node] = value;
        results["intervention"] = std::move(iv);
    }
    if (!fit_args.empty()) {
        if (fit_args.size() < 2) {
            throw schema_error("--fit expects a response followed by regressors");
        }
        const std::vector<std::string> regressors(fit_args.begin() + 1, fit_args.end());
        const auto fit = causal::ols_fit(data, fit_args.front(), regressors, true);
        results["fit"] = json{{"response", fit_args.front()},
                              {"names", fit.names},
                              {"coefficients", fit.coefficients},
                              {"standard_errors", fit.standard_errors},
                              {"residual_variance", fit.residual_variance}};
    }
    json diagnostics{{"command", "simulate"},
                     {"n", n},
                     {"seed", seed},
                     {"intervened", intervention.assignments.size()}};
    emit_report(problem.digest, std::move(results), std::move(diagnostics));
}

std::vector<std::vector<double>> parse_balance_csv(const std::string& path,
                                                   std::vector<std::vector<double>>& group2) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read group data '" + path + "'");
    std::vector<std::vector<double>> group1;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> numbers;
        bool numeric = true;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(field, &used);
                while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used])))
                    ++used;
                if (used != field.size()) throw std::invalid_argument(field);
                numbers.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {  // a single header row is allowed
                first = false;
                continue;
            }
            throw schema_error("group data rows must be numeric");
        }
        first = false;
        if (numbers.size() < 2) {
            throw schema_error("group data rows need covariates plus a group label");
        }
        const double label = numbers.back();
        numbers.pop_back();
        if (label == 1.0) {
            group1.push_back(std::move(numbers));
        } else if (label == 2.0) {
            group2.push_back(std::move(numbers));
        } else {
            throw schema_error("group labels must be 1 or 2");
        }
    }
    return group1;
}

void cmd_balance(const CommonOpts& opts, bool pair, const std::string& cov_arg) {
    const Problem problem = load_problem(opts.input, "balance");
    check_fields(problem.body, "balance problem", {"kind", "psi"},
                 {"group1", "group2", "csv", "strata"});
    const double psi = as_real(problem.body["psi"], "psi");

    const bool inline_groups = problem.body.contains("group1") || problem.body.contains("group2");
    if (inline_groups == problem.body.contains("csv")) {
        throw schema_error("give either inline 'group1'/'group2' or a 'csv' path");
    }
    std::vector<std::vector<double>> g1, g2;
    if (inline_groups) {
        if (!problem.body.contains("group1") || !problem.body.contains("group2")) {
            throw schema_error("'group1' and 'group2' must be given together");
        }
        g1 = as_real_rows(problem.body["group1"], "group1");
        g2 = as_real_rows(problem.body["group2"], "group2");
    } else {
        if (!problem.body["csv"].is_string()) throw schema_error("csv must be a file path");
        g1 = parse_balance_csv(problem.body["csv"].get<std::string>(), g2);
    }
    const balance::TwoGroupData data(g1, g2, psi);

    json means = json::array();
    for (const auto* group : {&data.group1(), &data.group2()}) {
        std::vector<double> mean(data.dimension(), 0.0);
        for (const auto& unit : *group)
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += unit[d];
        for (auto& m : mean) m /= static_cast<double>(group->size());
        means.push_back(json(mean));
    }

    json results{{"group_means", std::move(means)},
                 {"bias", balance::two_group_bias(data)},
                 {"psi", psi}};
    if (data.dimension() == 1) {
        results["moment"] = matrix_to_json(balance::two_group_moment(data));
    }
    if (problem.body.contains("strata")) {
        const json& strata = problem.body["strata"];
        if (!strata.is_array() || strata.empty()) {
            throw schema_error("strata must be a nonempty array");
        }
        std::vector<balance::TwoGroupData> groups;
        std::vector<double> weights;
        for (std::size_t i = 0; i < strata.size(); ++i) {
            const std::string ctx = "strata[" + std::to_string(i) + "]";
            if (!strata[i].is_object()) throw schema_error(ctx + " must be an object");
            check_fields(strata[i], ctx, {"group1", "group2", "weight"}, {});
            groups.emplace_back(as_real_rows(strata[i]["group1"], ctx + ".group1"),
                                as_real_rows(strata[i]["group2"], ctx + ".group2"), psi);
            weights.push_back(as_real(strata[i]["weight"], ctx + ".weight"));
        }
        results["stratified_difference"] = balance::stratified_difference(groups, weights);
    }
    if (pair) {
        const numerics::Matrix cov = [&] {
            if (cov_arg == "identity") {
                return numerics::Matrix::identity(data.dimension());
            }
            std::ifstream in(cov_arg, std::ios::binary);
            if (!in) throw io_error("cannot read covariance file '" + cov_arg + "'");
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw schema_error(std::string("covariance file is not valid JSON: ") +
                                   e.what());
            }
            return as_matrix(j, "covariance");
        }();
        const auto pairing = balance::mahalanobis_pairing(data.group1(), data.group2(), cov);
        json pairs = json::array();
        for (const auto& [t, c] : pairing.pairs) {
            pairs.push_back(json::array({t, c}));
        }
        results["pairing"] =
            json{{"pairs", std::move(pairs)}, {"total_distance", pairing.total_distance}};
    }
    json diagnostics{{"command", "balance"},
                     {"per_group", data.per_group()},
                     {"dimension", data.dimension()}};
    emit_report(problem.digest, std::move(results), std::move(diagnostics));
}

numerics::Matrix minimax_payoff(const json& body) {
    const bool has_payoff = body.contains("payoff");
    const bool has_build = body.contains("xs") || body.contains("basis") ||
                           body.contains("z_levels") || body.contains("assignments") ||
                           body.contains("dictionary");
    if (has_payoff == has_build) {
        throw schema_error(
            "give either a 'payoff' matrix or the xs/basis/z_levels/assignments/dictionary"
            " description");
    }
    if (has_payoff) return as_matrix(body["payoff"], "payoff");

    for (const char* field : {"xs", "basis", "z_levels", "assignments", "dictionary"}) {
        if (!body.contains(field)) {
            throw schema_error(std::string("missing field '") + field + "'");
        }
    }
    const auto xs = as_real_vector(body["xs"], "xs");
    const design::MonomialBasis basis(as_exponents(body["basis"], "basis"));
    const auto z_levels = as_real_vector(body["z_levels"], "z_levels");
    const auto assignments = as_real_rows(body["assignments"], "assignments");
    const auto dictionary = as_real_rows(body["dictionary"], "dictionary");
    if (xs.empty() || assignments.empty() || dictionary.empty()) {
        throw schema_error("xs, assignments and dictionary must be nonempty");
    }
    std::vector<std::vector<double>> x_points;
    for (double x : xs) x_points.push_back({x});
    const numerics::Matrix q2 = criteria::q2_matrix(x_points, basis);

    auto level_index = [&](double z) -> std::size_t {
        for (std::size_t k = 0; k < z_levels.size(); ++k) {
            if (z_levels[k] == z) return k;
        }
        throw schema_error("assignment entries must equal one of the z_levels");
    };
    numerics::Matrix payoff(assignments.size(), dictionary.size());
    for (std::size_t r = 0; r < assignments.size(); ++r) {
        if (assignments[r].size() != xs.size()) {
            throw schema_error("each assignment must give one z per run");
        }
        for (std::size_t c = 0; c < dictionary.size(); ++c) {
            if (dictionary[c].size() != z_levels.size()) {
                throw schema_error("each dictionary entry must give one value per z level");
            }
            std::vector<double> hv(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                hv[i] = dictionary[c][level_index(assignments[r][i])];
            }
            double v = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i)
                for (std::size_t j = 0; j < xs.size(); ++j) v += hv[i] * q2(i, j) * hv[j];
            payoff(r, c) = v;
        }
    }
    return payoff;
}

void cmd_minimax(const CommonOpts& opts) {
    const Problem problem = load_problem(opts.input, "game");
    check_fields(problem.body, "game problem", {"kind"},
                 {"payoff", "xs", "basis", "z_levels", "assignments", "dictionary"});
    const numerics::Matrix payoff = minimax_payoff(problem.body);
    const auto sol = game::randomization_minimax(payoff);
    const auto lit = game::literal_minimax(payoff);

    json results{{"payoff", matrix_to_json(payoff)},
                 {"value", sol.value},
                 {"gap", sol.gap},
                 {"iterations", sol.iterations},
                 {"polished", sol.polished},
                 {"row_probabilities", sol.row_probabilities},
                 {"strategy", json{{"atoms", sol.strategy.atoms},
                                   {"probabilities", sol.strategy.probabilities}}},
                 {"literal", json{{"row", lit.row}, {"value", lit.value}}}};
    json diagnostics{{"command", "minimax"},
                     {"rows", payoff.rows()},
                     {"columns", payoff.cols()},
                     {"iterations", sol.iterations},
                     {"polished", sol.polished}};
    emit_report(problem.digest, std::move(results), std::move(diagnostics));
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::input: return 2;
        case ErrorKind::singular: return 3;
        case ErrorKind::no_convergence: return 4;
        case ErrorKind::size_cap: return 5;
        case ErrorKind::io: return 6;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bias-aware experimental design toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string starts_arg;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::string out_path = "dataset.csv";
    std::vector<std::string> do_args;
    std::vector<std::string> fit_args;
    bool pair = false;
    std::string cov_arg = "identity";

    CLI::App* criteria = app.add_subcommand("criteria", "design criteria for a measure");
    CLI::App* nash = app.add_subcommand("nash", "equilibria of the design game");
    CLI::App* backdoor = app.add_subcommand("backdoor", "adjustment-set checks on a DAG");
    CLI::App* simulate = app.add_subcommand("simulate", "draw from a linear structural model");
    CLI::App* balance_cmd = app.add_subcommand("balance", "two-group balance diagnostics");
    CLI::App* minimax = app.add_subcommand("minimax", "randomized assignment game");

    for (CLI::App* sub : {criteria, nash, backdoor, simulate, balance_cmd, minimax}) {
        sub->add_option("--input", opts.input, "problem file (JSON)")->required();
    }
    CLI::Option* psi_c = criteria->add_option("--psi", opts.psi, "bias weight override");
    CLI::Option* psi_n = nash->add_option("--psi", opts.psi, "bias weight override");
    nash->add_option("--starts", starts_arg, "start list 'a,b;c,d;...'");
    simulate->add_option("--n", n, "sample count");
    simulate->add_option("--seed", seed, "generator seed");
    simulate->add_option("--out", out_path, "CSV output path");
    simulate->add_option("--do", do_args, "intervention NODE=VALUE");
    simulate->add_option("--fit", fit_args, "least squares: RESPONSE REGRESSORS...");
    balance_cmd->add_flag("--pair", pair, "report a greedy Mahalanobis pairing");
    balance_cmd->add_option("--cov", cov_arg, "pairing covariance: 'identity' or a JSON file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help path
        std::cerr << "error: bad_arguments: " << e.what() << "\n";
        return 2;
    }

    opts.psi_set = (psi_c->count() > 0) || (psi_n->count() > 0);
    try {
        if (criteria->parsed()) {
            cmd_criteria(opts);
        } else if (nash->parsed()) {
            return cmd_nash(opts, starts_arg);
        } else if (backdoor->parsed()) {
            cmd_backdoor(opts);
        } else if (simulate->parsed()) {
            cmd_simulate(opts, n, seed, do_args, fit_args, out_path);
        } else if (balance_cmd->parsed()) {
            cmd_balance(opts, pair, cov_arg);
        } else if (minimax->parsed()) {
            cmd_minimax(opts);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
