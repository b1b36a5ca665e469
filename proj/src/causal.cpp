#include "bias_design/causal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <random>
#include <set>

#include "bias_design/errors.hpp"
#include "bias_design/matrix.hpp"

namespace bias_design::causal {

Dag::Dag(std::vector<std::string> nodes,
         std::vector<std::pair<std::string, std::string>> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i], i).second) {
            throw Error(ErrorKind::input, "duplicate_node",
                        "node '" + nodes_[i] + "' is declared twice");
        }
    }
    parents_.assign(nodes_.size(), {});
    children_.assign(nodes_.size(), {});
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [from, to] : edges_) {
        const std::size_t u = index(from);
        const std::size_t v = index(to);
        if (u == v) {
            throw Error(ErrorKind::input, "self_loop",
                        "edge '" + from + "' -> '" + to + "' is a self-loop");
        }
        if (!seen.emplace(u, v).second) {
            throw Error(ErrorKind::input, "duplicate_edge",
                        "edge '" + from + "' -> '" + to + "' appears twice");
        }
        children_[u].push_back(v);
        parents_[v].push_back(u);
    }
    // Kahn's algorithm; a leftover node means a directed cycle.
    std::vector<std::size_t> indeg(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v) indeg[v] = parents_[v].size();
    std::deque<std::size_t> ready;
    for (std::size_t v = 0; v < nodes_.size(); ++v)
        if (indeg[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        const std::size_t v = ready.front();
        ready.pop_front();
        topo_.push_back(v);
        for (std::size_t c : children_[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (topo_.size() != nodes_.size()) {
        throw Error(ErrorKind::input, "cyclic_graph",
                    "the edge list contains a directed cycle");
    }
}

bool Dag::has_node(const std::string& label) const noexcept {
    return index_.count(label) != 0;
}

std::size_t Dag::index(const std::string& label) const {
    const auto it = index_.find(label);
    if (it == index_.end()) throw unknown_node("no node named '" + label + "'");
    return it->second;
}

namespace {

std::vector<bool> descendant_mask(const Dag& dag, std::size_t node) {
    std::vector<bool> seen(dag.size(), false);
    std::deque<std::size_t> frontier{node};
    while (!frontier.empty()) {
        const std::size_t v = frontier.front();
        frontier.pop_front();
        for (std::size_t c : dag.children(v)) {
            if (!seen[c]) {
                seen[c] = true;
                frontier.push_back(c);
            }
        }
    }
    seen[node] = false;  // reachability excludes the start node
    return seen;
}

std::vector<bool> member_mask(const Dag& dag, const std::set<std::string>& labels) {
    std::vector<bool> mask(dag.size(), false);
    for (const auto& label : labels) mask[dag.index(label)] = true;
    return mask;
}

bool d_separated_idx(const Dag& dag, std::size_t a, std::size_t b,
                     const std::vector<bool>& in_s) {
    // Nodes with a member of s at or below them: these re-open colliders.
    std::vector<bool> opens(in_s);
    {
        std::deque<std::size_t> frontier;
        for (std::size_t v = 0; v < dag.size(); ++v)
            if (opens[v]) frontier.push_back(v);
        while (!frontier.empty()) {
            const std::size_t v = frontier.front();
            frontier.pop_front();
            for (std::size_t p : dag.parents(v)) {
                if (!opens[p]) {
                    opens[p] = true;
                    frontier.push_back(p);
                }
            }
        }
    }
    // Reachability over (node, arrived-from) states. Arriving from a child
    // lets the walk pass any node outside s in both directions (chain up,
    // fork down). Arriving from a parent continues down through nodes outside
    // s and bounces back up exactly at opened colliders.
    const int kFromChild = 0, kFromParent = 1;
    std::vector<std::array<bool, 2>> visited(dag.size(), {false, false});
    std::deque<std::pair<std::size_t, int>> frontier;
    auto push = [&](std::size_t v, int dir) {
        if (!visited[v][dir]) {
            visited[v][dir] = true;
            frontier.emplace_back(v, dir);
        }
    };
    push(a, kFromChild);
    while (!frontier.empty()) {
        const auto [v, dir] = frontier.front();
        frontier.pop_front();
        if (v == b) return false;
        if (dir == kFromChild) {
            if (!in_s[v]) {
                for (std::size_t p : dag.parents(v)) push(p, kFromChild);
                for (std::size_t c : dag.children(v)) push(c, kFromParent);
            }
        } else {
            if (!in_s[v]) {
                for (std::size_t c : dag.children(v)) push(c, kFromParent);
            }
            if (opens[v]) {
                for (std::size_t p : dag.parents(v)) push(p, kFromChild);
            }
        }
    }
    return true;
}

Dag without_outgoing(const Dag& dag, const std::string& node) {
    std::vector<std::pair<std::string, std::string>> kept;
    for (const auto& e : dag.edges())
        if (e.first != node) kept.push_back(e);
    return Dag(dag.nodes(), kept);
}

}  // namespace

std::set<std::string> descendants(const Dag& dag, const std::string& node) {
    const auto mask = descendant_mask(dag, dag.index(node));
    std::set<std::string> out;
    for (std::size_t v = 0; v < dag.size(); ++v)
        if (mask[v]) out.insert(dag.nodes()[v]);
    return out;
}

bool d_separated(const Dag& dag, const std::string& a, const std::string& b,
                 const std::set<std::string>& s) {
    const std::size_t ia = dag.index(a);
    const std::size_t ib = dag.index(b);
    if (ia == ib) throw overlapping_arguments("the two endpoints must differ");
    if (s.count(a) || s.count(b)) {
        throw overlapping_arguments("the conditioning set must exclude both endpoints");
    }
    return d_separated_idx(dag, ia, ib, member_mask(dag, s));
}

BackdoorResult backdoor_admissible(const Dag& dag, const std::string& cause,
                                   const std::string& effect,
                                   const std::set<std::string>& s) {
    const std::size_t ic = dag.index(cause);
    dag.index(effect);
    if (cause == effect) throw overlapping_arguments("cause and effect must differ");
    if (s.count(cause) || s.count(effect)) {
        throw overlapping_arguments("the adjustment set must exclude cause and effect");
    }
    BackdoorResult result;
    const auto desc = descendant_mask(dag, ic);
    result.no_descendant_conditioned = true;
    for (const auto& label : s) {
        if (desc[dag.index(label)]) {
            result.no_descendant_conditioned = false;
            break;
        }
    }
    const Dag pruned = without_outgoing(dag, cause);
    result.backdoor_paths_blocked =
        d_separated_idx(pruned, pruned.index(cause), pruned.index(effect),
                        member_mask(pruned, s));
    result.admissible = result.no_descendant_conditioned && result.backdoor_paths_blocked;
    return result;
}

std::vector<std::set<std::string>> minimal_backdoor_sets(const Dag& dag,
                                                         const std::string& cause,
                                                         const std::string& effect) {
    if (dag.size() > 20) {
        throw graph_too_large("subset enumeration is capped at 20 nodes");
    }
    dag.index(cause);
    dag.index(effect);
    if (cause == effect) throw overlapping_arguments("cause and effect must differ");

    const auto desc = descendant_mask(dag, dag.index(cause));
    std::vector<std::string> candidates;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        const std::string& label = dag.nodes()[v];
        if (label != cause && label != effect && !desc[v]) candidates.push_back(label);
    }
    std::sort(candidates.begin(), candidates.end());

    // Candidates exclude every descendant of the cause, so the descendant
    // condition holds for free; only the path condition needs checking, on
    // the once-built pruned graph (node indices match the original).
    const Dag pruned = without_outgoing(dag, cause);
    const std::size_t ic = pruned.index(cause);
    const std::size_t ie = pruned.index(effect);
    std::vector<std::size_t> candidate_idx;
    for (const auto& label : candidates) candidate_idx.push_back(pruned.index(label));

    std::vector<std::set<std::string>> minimal;
    const std::size_t m = candidates.size();
    // Size-ascending enumeration: a set is inclusion-minimal exactly when no
    // smaller admissible set is contained in it.
    for (std::size_t sz = 0; sz <= m; ++sz) {
        std::vector<std::size_t> comb(sz);
        for (std::size_t k = 0; k < sz; ++k) comb[k] = k;
        for (;;) {
            std::set<std::string> s;
            std::vector<bool> mask(pruned.size(), false);
            for (std::size_t k = 0; k < sz; ++k) {
                s.insert(candidates[comb[k]]);
                mask[candidate_idx[comb[k]]] = true;
            }
            bool dominated = false;
            for (const auto& kept : minimal) {
                if (std::includes(s.begin(), s.end(), kept.begin(), kept.end())) {
                    dominated = true;
                    break;
                }
            }
            if (!dominated && d_separated_idx(pruned, ic, ie, mask)) {
                minimal.push_back(std::move(s));
            }
            if (sz == 0) break;
            std::size_t k = sz;
            while (k > 0 && comb[k - 1] == m - sz + (k - 1)) --k;
            if (k == 0) break;
            ++comb[k - 1];
            for (std::size_t t = k; t < sz; ++t) comb[t] = comb[t - 1] + 1;
        }
    }
    std::stable_sort(minimal.begin(), minimal.end(),
                     [](const std::set<std::string>& x, const std::set<std::string>& y) {
                         if (x.size() != y.size()) return x.size() < y.size();
                         return std::lexicographical_compare(x.begin(), x.end(), y.begin(),
                                                             y.end());
                     });
    return minimal;
}

LinearSem::LinearSem(Dag dag, std::map<std::pair<std::string, std::string>, double> coefficients,
                     std::map<std::string, double> intercepts,
                     std::map<std::string, double> noise_scales)
    : dag_(std::move(dag)),
      coefficients_(std::move(coefficients)),
      intercepts_(std::move(intercepts)),
      noise_scales_(std::move(noise_scales)) {
    std::set<std::pair<std::string, std::string>> edge_set(dag_.edges().begin(),
                                                           dag_.edges().end());
    for (const auto& [edge, coef] : coefficients_) {
        if (!edge_set.count(edge)) {
            throw Error(ErrorKind::input, "unknown_edge",
                        "coefficient given for missing edge '" + edge.first + "' -> '" +
                            edge.second + "'");
        }
        if (!std::isfinite(coef)) throw non_finite("edge coefficients must be finite");
    }
    for (const auto& edge : edge_set) {
        if (!coefficients_.count(edge)) {
            throw Error(ErrorKind::input, "missing_coefficient",
                        "edge '" + edge.first + "' -> '" + edge.second +
                            "' has no coefficient");
        }
    }
    for (const auto& [node, value] : intercepts_) {
        dag_.index(node);
        if (!std::isfinite(value)) throw non_finite("intercepts must be finite");
    }
    for (const auto& label : dag_.nodes()) {
        const auto it = noise_scales_.find(label);
        if (it == noise_scales_.end()) {
            throw Error(ErrorKind::input, "missing_noise_scale",
                        "node '" + label + "' has no noise scale");
        }
        if (!(it->second > 0.0) || !std::isfinite(it->second)) {
            throw parameter_out_of_range("noise scales must be positive and finite");
        }
    }
    for (const auto& [node, scale] : noise_scales_) {
        dag_.index(node);
        (void)scale;
    }
}

double LinearSem::coefficient(const std::string& parent, const std::string& child) const {
    return coefficients_.at({parent, child});
}

double LinearSem::intercept(const std::string& node) const {
    const auto it = intercepts_.find(node);
    return it == intercepts_.end() ? 0.0 : it->second;
}

double LinearSem::noise_scale(const std::string& node) const {
    return noise_scales_.at(node);
}

const std::vector<double>& Dataset::column(const std::string& label) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == label) return values[c];
    }
    throw unknown_node("no column named '" + label + "'");
}

namespace {

// Standard normal deviates from mt19937_64 via the polar method. Uniforms use
// the top 53 bits of each engine draw, so the byte stream is identical across
// platforms (the distribution templates in <random> are not pinned down by
// the standard and are avoided).
class NormalSource {
  public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                const double scale = std::sqrt(-2.0 * std::log(s) / s);
                spare_ = v * scale;
                have_spare_ = true;
                return u * scale;
            }
        }
    }

  private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace

Dataset simulate(const LinearSem& sem, std::size_t n, std::uint64_t seed,
                 const Intervention& intervention) {
    if (n < 1) throw parameter_out_of_range("at least one sample is required");
    const Dag& dag = sem.dag();
    std::vector<bool> pinned(dag.size(), false);
    std::vector<double> pinned_value(dag.size(), 0.0);
    for (const auto& [label, value] : intervention.assignments) {
        if (!std::isfinite(value)) throw non_finite("intervention values must be finite");
        const std::size_t v = dag.index(label);
        pinned[v] = true;
        pinned_value[v] = value;
    }

    Dataset data;
    data.columns = dag.nodes();
    data.values.assign(dag.size(), std::vector<double>(n, 0.0));

    NormalSource normal(seed);
    std::vector<double> row(dag.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t v : dag.topological_order()) {
            const double z = normal();  // always consumed, keeping streams aligned
            if (pinned[v]) {
                row[v] = pinned_value[v];
                continue;
            }
            const std::string& label = dag.nodes()[v];
            double value = sem.intercept(label) + sem.noise_scale(label) * z;
            for (std::size_t p : dag.parents(v)) {
                value += sem.coefficient(dag.nodes()[p], label) * row[p];
            }
            row[v] = value;
        }
        for (std::size_t v = 0; v < dag.size(); ++v) data.values[v][r] = row[v];
    }
    return data;
}

OlsFit ols_fit(const Dataset& data, const std::string& response,
               const std::vector<std::string>& regressors, bool with_intercept) {
    const std::vector<double>& y = data.column(response);
    std::vector<const std::vector<double>*> x;
    std::vector<std::string> names;
    if (with_intercept) names.emplace_back("(intercept)");
    for (const auto& label : regressors) {
        x.push_back(&data.column(label));
        names.push_back(label);
    }
    const std::size_t n = y.size();
    const std::size_t k = names.size();
    if (k == 0) throw parameter_out_of_range("a fit needs at least one regressor");
    if (n <= k) throw insufficient_data("more coefficients than samples");

    auto column_value = [&](std::size_t j, std::size_t r) {
        if (with_intercept) return j == 0 ? 1.0 : (*x[j - 1])[r];
        return (*x[j])[r];
    };
    numerics::Matrix gram(k, k);
    std::vector<double> xty(k, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < k; ++i) {
            const double xi = column_value(i, r);
            xty[i] += xi * y[r];
            for (std::size_t j = i; j < k; ++j) gram(i, j) += xi * column_value(j, r);
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j) gram(i, j) = gram(j, i);

    const numerics::Matrix inv = numerics::invert(gram, 1e-10);
    OlsFit fit;
    fit.names = std::move(names);
    fit.coefficients.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) fit.coefficients[i] += inv(i, j) * xty[j];

    double rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double pred = 0.0;
        for (std::size_t i = 0; i < k; ++i) pred += fit.coefficients[i] * column_value(i, r);
        const double e = y[r] - pred;
        rss += e * e;
    }
    fit.residual_variance = rss / static_cast<double>(n - k);
    fit.standard_errors.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        fit.standard_errors[i] = std::sqrt(std::max(0.0, fit.residual_variance * inv(i, i)));
    }
    fit.n = n;
    return fit;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    for (std::size_t c = 0; c < data.columns.size(); ++c) {
        if (c) out << ',';
        out << data.columns[c];
    }
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.columns.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", data.values[c][r]);
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    out.flush();
    if (!out) throw io_error("failed while writing '" + path.string() + "'");
}

}  // namespace bias_design::causal
