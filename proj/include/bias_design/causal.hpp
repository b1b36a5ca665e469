#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace bias_design::causal {

// Directed acyclic graph over labeled nodes. Construction validates that the
// edge endpoints are declared, that there are no self-loops or duplicate
// edges, and that a topological order exists.
class Dag {
  public:
    Dag(std::vector<std::string> nodes,
        std::vector<std::pair<std::string, std::string>> edges);

    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    const std::vector<std::pair<std::string, std::string>>& edges() const noexcept {
        return edges_;
    }
    std::size_t size() const noexcept { return nodes_.size(); }

    bool has_node(const std::string& label) const noexcept;
    std::size_t index(const std::string& label) const;  // throws on unknown label

    const std::vector<std::size_t>& parents(std::size_t node) const { return parents_.at(node); }
    const std::vector<std::size_t>& children(std::size_t node) const {
        return children_.at(node);
    }
    // Node indices in a valid topological order (parents before children).
    const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

  private:
    std::vector<std::string> nodes_;
    std::vector<std::pair<std::string, std::string>> edges_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_;
};

// All nodes reachable from `node` along directed edges, excluding the node
// itself.
std::set<std::string> descendants(const Dag& dag, const std::string& node);

// True iff every undirected path between a and b is blocked by s: a chain or
// fork node on the path blocks when it is in s, a collider blocks when
// neither it nor any of its descendants is in s. Implemented as a
// reachability sweep over (node, arrival direction) states.
bool d_separated(const Dag& dag, const std::string& a, const std::string& b,
                 const std::set<std::string>& s);

struct BackdoorResult {
    bool no_descendant_conditioned = false;  // s avoids descendants of the cause
    bool backdoor_paths_blocked = false;     // s blocks every into-cause path
    bool admissible = false;                 // both of the above
};

// Checks the two adjustment conditions for estimating the effect of `cause`
// on `effect` given conditioning set s. The path condition is evaluated as
// d-separation in the graph with the cause's outgoing edges removed, which
// retains exactly the paths entering the cause.
BackdoorResult backdoor_admissible(const Dag& dag, const std::string& cause,
                                   const std::string& effect, const std::set<std::string>& s);

// All inclusion-minimal admissible adjustment sets, by brute-force subset
// enumeration over the non-descendant candidates; sorted by size, then
// lexicographically. Graphs over 20 nodes are rejected.
std::vector<std::set<std::string>> minimal_backdoor_sets(const Dag& dag,
                                                         const std::string& cause,
                                                         const std::string& effect);

// Linear Gaussian structural model over a DAG: each node is
// intercept + sum of coefficient * parent + scale * standard normal noise.
class LinearSem {
  public:
    LinearSem(Dag dag, std::map<std::pair<std::string, std::string>, double> coefficients,
              std::map<std::string, double> intercepts,
              std::map<std::string, double> noise_scales);

    const Dag& dag() const noexcept { return dag_; }
    double coefficient(const std::string& parent, const std::string& child) const;
    double intercept(const std::string& node) const;
    double noise_scale(const std::string& node) const;

  private:
    Dag dag_;
    std::map<std::pair<std::string, std::string>, double> coefficients_;
    std::map<std::string, double> intercepts_;
    std::map<std::string, double> noise_scales_;
};

// Nodes pinned to constants during simulation; incoming influences are cut.
struct Intervention {
    std::map<std::string, double> assignments;
};

// Column-major sample table; columns follow the DAG's declaration order.
struct Dataset {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[column][row]

    std::size_t rows() const noexcept { return values.empty() ? 0 : values[0].size(); }
    const std::vector<double>& column(const std::string& label) const;
};

// Draws n joint samples in topological order, deterministically in the seed.
// The generator is std::mt19937_64; uniforms take the top 53 bits of each
// draw; normals come from the polar method. One normal deviate is consumed
// per (row, node) even for intervened nodes, so runs that differ only in the
// intervention see identical noise everywhere else.
Dataset simulate(const LinearSem& sem, std::size_t n, std::uint64_t seed,
                 const Intervention& intervention = {});

struct OlsFit {
    std::vector<std::string> names;  // "(intercept)" first when requested
    std::vector<double> coefficients;
    std::vector<double> standard_errors;  // classical, from the residual variance
    double residual_variance = 0.0;
    std::size_t n = 0;
};

// Least-squares fit of response on the named regressor columns via the normal
// equations; the Gram matrix is inverted at relative tolerance 1e-10.
OlsFit ols_fit(const Dataset& data, const std::string& response,
               const std::vector<std::string>& regressors, bool with_intercept);

// Writes the dataset as CSV: one header row of column labels, then one row
// per sample, values at round-trip precision.
void write_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace bias_design::causal
