#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bias_design/causal.hpp"
#include "bias_design/errors.hpp"

using namespace bias_design;
using namespace bias_design::causal;

namespace {

Dag five_node() {
    return Dag({"X1", "X2", "X3", "X4", "X5"},
               {{"X1", "X2"}, {"X2", "X3"}, {"X3", "X4"}, {"X1", "X4"}, {"X4", "X5"}});
}

Dag chain4() {
    return Dag({"X1", "X2", "X3", "X4"}, {{"X1", "X2"}, {"X2", "X3"}, {"X3", "X4"}});
}

// Independent d-separation oracle: enumerate every simple undirected path and
// apply the blocking rules node by node. Exponential, fine at test sizes.
class PathOracle {
  public:
    explicit PathOracle(const Dag& dag) : dag_(dag) {
        adj_.assign(dag.size(), {});
        for (const auto& [from, to] : dag.edges()) {
            const std::size_t u = dag.index(from);
            const std::size_t v = dag.index(to);
            adj_[u].push_back(v);
            adj_[v].push_back(u);
            directed_.insert({u, v});
        }
        desc_.resize(dag.size());
        for (std::size_t v = 0; v < dag.size(); ++v) {
            for (const auto& label : descendants(dag, dag.nodes()[v])) {
                desc_[v].insert(dag.index(label));
            }
        }
    }

    bool separated(std::size_t a, std::size_t b, const std::set<std::size_t>& s) const {
        std::vector<std::size_t> path{a};
        std::vector<bool> used(dag_.size(), false);
        used[a] = true;
        return !open_path_exists(a, b, s, path, used);
    }

  private:
    bool open_path_exists(std::size_t v, std::size_t b, const std::set<std::size_t>& s,
                          std::vector<std::size_t>& path, std::vector<bool>& used) const {
        for (std::size_t nb : adj_[v]) {
            if (nb == b) {
                path.push_back(b);
                const bool open = path_open(path, s);
                path.pop_back();
                if (open) return true;
            } else if (!used[nb]) {
                used[nb] = true;
                path.push_back(nb);
                if (open_path_exists(nb, b, s, path, used)) {
                    used[nb] = false;
                    path.pop_back();
                    return true;
                }
                used[nb] = false;
                path.pop_back();
            }
        }
        return false;
    }

    bool path_open(const std::vector<std::size_t>& path, const std::set<std::size_t>& s) const {
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            const std::size_t v = path[i];
            const bool into_from_prev = directed_.count({path[i - 1], v}) != 0;
            const bool into_from_next = directed_.count({path[i + 1], v}) != 0;
            if (into_from_prev && into_from_next) {  // collider
                bool activated = s.count(v) != 0;
                for (std::size_t d : desc_[v]) {
                    if (activated) break;
                    activated = s.count(d) != 0;
                }
                if (!activated) return false;
            } else {  // chain or fork
                if (s.count(v)) return false;
            }
        }
        return true;
    }

    const Dag& dag_;
    std::vector<std::vector<std::size_t>> adj_;
    std::set<std::pair<std::size_t, std::size_t>> directed_;
    std::vector<std::set<std::size_t>> desc_;
};

std::set<std::string> labels_of(const Dag& dag, const std::set<std::size_t>& idx) {
    std::set<std::string> out;
    for (std::size_t v : idx) out.insert(dag.nodes()[v]);
    return out;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

LinearSem chain_sem(double theta0, double theta) {
    Dag dag = chain4();
    return LinearSem(dag,
                     {{{"X1", "X2"}, theta}, {{"X2", "X3"}, theta}, {{"X3", "X4"}, theta}},
                     {{"X1", theta0}},
                     {{"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}, {"X4", 1.0}});
}

// Four-node model with the extra direct edge X1 -> X4: conditioning on X3
// alone leaves the path through X1 open, so the naive slope is biased.
LinearSem confounded_sem() {
    Dag dag({"X1", "X2", "X3", "X4"},
            {{"X1", "X2"}, {"X2", "X3"}, {"X3", "X4"}, {"X1", "X4"}});
    return LinearSem(dag,
                     {{{"X1", "X2"}, 1.0},
                      {{"X2", "X3"}, 1.0},
                      {{"X3", "X4"}, 1.0},
                      {{"X1", "X4"}, 1.0}},
                     {},
                     {{"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}, {"X4", 1.0}});
}

}  // namespace

TEST_CASE("dag construction validates its invariants") {
    CHECK_NOTHROW(five_node());
    CHECK_THROWS_AS(Dag({"A", "B"}, {{"A", "B"}, {"B", "A"}}), Error);
    CHECK_THROWS_AS(Dag({"A"}, {{"A", "A"}}), Error);
    CHECK_THROWS_AS(Dag({"A", "B"}, {{"A", "B"}, {"A", "B"}}), Error);
    CHECK_THROWS_AS(Dag({"A", "B"}, {{"A", "C"}}), Error);
    CHECK_THROWS_AS(Dag({"A", "A"}, {}), Error);
    try {
        Dag({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"C", "A"}});
        FAIL("cycle accepted");
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "cyclic_graph");
    }
}

TEST_CASE("topological order puts parents before children") {
    const Dag dag = five_node();
    const auto& topo = dag.topological_order();
    std::vector<std::size_t> position(dag.size());
    for (std::size_t i = 0; i < topo.size(); ++i) position[topo[i]] = i;
    for (const auto& [from, to] : dag.edges()) {
        CHECK(position[dag.index(from)] < position[dag.index(to)]);
    }
}

TEST_CASE("descendants on chains and the five-node graph") {
    const Dag chain = chain4();
    CHECK(descendants(chain, "X4").empty());
    CHECK(descendants(chain, "X1") == std::set<std::string>{"X2", "X3", "X4"});
    const Dag g = five_node();
    CHECK(descendants(g, "X3") == std::set<std::string>{"X4", "X5"});
    CHECK(descendants(g, "X5").empty());
    CHECK_THROWS_AS(descendants(g, "nope"), Error);
}

TEST_CASE("d-separation textbook cases") {
    const Dag chain({"X1", "X2", "X3"}, {{"X1", "X2"}, {"X2", "X3"}});
    CHECK(d_separated(chain, "X1", "X3", {"X2"}));
    CHECK_FALSE(d_separated(chain, "X1", "X3", {}));

    const Dag collider({"X1", "X2", "X3"}, {{"X1", "X3"}, {"X2", "X3"}});
    CHECK(d_separated(collider, "X1", "X2", {}));
    CHECK_FALSE(d_separated(collider, "X1", "X2", {"X3"}));

    // Conditioning on a descendant of the collider also opens it.
    const Dag deep({"A", "B", "C", "D"}, {{"A", "C"}, {"B", "C"}, {"C", "D"}});
    CHECK(d_separated(deep, "A", "B", {}));
    CHECK_FALSE(d_separated(deep, "A", "B", {"D"}));

    // Five-node graph with the X3 -> X4 edge removed: the remaining path
    // X3 <- X2 <- X1 -> X4 is blocked at the fork X1.
    const Dag cut({"X1", "X2", "X3", "X4", "X5"},
                  {{"X1", "X2"}, {"X2", "X3"}, {"X1", "X4"}, {"X4", "X5"}});
    CHECK(d_separated(cut, "X3", "X4", {"X1"}));
    CHECK_FALSE(d_separated(cut, "X3", "X4", {}));
}

TEST_CASE("d-separation argument validation") {
    const Dag g = five_node();
    CHECK_THROWS_AS(d_separated(g, "X1", "X1", {}), Error);
    CHECK_THROWS_AS(d_separated(g, "X1", "X9", {}), Error);
    CHECK_THROWS_AS(d_separated(g, "X1", "X3", {"X1"}), Error);
    CHECK_THROWS_AS(d_separated(g, "X1", "X3", {"X9"}), Error);
}

TEST_CASE("d-separation matches the path-enumeration oracle everywhere") {
    std::vector<Dag> graphs;
    graphs.push_back(five_node());
    graphs.push_back(chain4());
    graphs.push_back(Dag({"A", "B", "C"}, {{"A", "C"}, {"B", "C"}}));
    // Seeded random DAGs: edges only from lower to higher index, so acyclic.
    std::mt19937_64 rng(12345);
    for (int g = 0; g < 12; ++g) {
        std::vector<std::string> nodes;
        for (int i = 0; i < 6; ++i) nodes.push_back("N" + std::to_string(i));
        std::vector<std::pair<std::string, std::string>> edges;
        for (int i = 0; i < 6; ++i) {
            for (int j = i + 1; j < 6; ++j) {
                if (rng() % 100 < 40) edges.emplace_back(nodes[i], nodes[j]);
            }
        }
        graphs.emplace_back(nodes, edges);
    }

    for (const Dag& dag : graphs) {
        const PathOracle oracle(dag);
        const std::size_t n = dag.size();
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                std::vector<std::size_t> rest;
                for (std::size_t v = 0; v < n; ++v)
                    if (v != a && v != b) rest.push_back(v);
                for (std::size_t bits = 0; bits < (1u << rest.size()); ++bits) {
                    std::set<std::size_t> s;
                    for (std::size_t k = 0; k < rest.size(); ++k)
                        if (bits & (1u << k)) s.insert(rest[k]);
                    const auto sl = labels_of(dag, s);
                    const bool want = oracle.separated(a, b, s);
                    const bool got = d_separated(dag, dag.nodes()[a], dag.nodes()[b], sl);
                    REQUIRE(got == want);
                    // Symmetry in the endpoints.
                    REQUIRE(d_separated(dag, dag.nodes()[b], dag.nodes()[a], sl) == got);
                }
            }
        }
    }
}

TEST_CASE("backdoor criterion on the five-node graph") {
    const Dag g = five_node();

    const auto with_x1 = backdoor_admissible(g, "X3", "X4", {"X1"});
    CHECK(with_x1.no_descendant_conditioned);
    CHECK(with_x1.backdoor_paths_blocked);
    CHECK(with_x1.admissible);

    const auto with_x2 = backdoor_admissible(g, "X3", "X4", {"X2"});
    CHECK(with_x2.admissible);

    const auto with_x5 = backdoor_admissible(g, "X3", "X4", {"X5"});
    CHECK_FALSE(with_x5.no_descendant_conditioned);
    CHECK_FALSE(with_x5.admissible);

    const auto empty = backdoor_admissible(g, "X3", "X4", {});
    CHECK(empty.no_descendant_conditioned);
    CHECK_FALSE(empty.backdoor_paths_blocked);
    CHECK_FALSE(empty.admissible);

    // Enlarging an admissible set by another non-descendant keeps it valid.
    CHECK(backdoor_admissible(g, "X3", "X4", {"X1", "X2"}).admissible);

    CHECK_THROWS_AS(backdoor_admissible(g, "X3", "X3", {}), Error);
    CHECK_THROWS_AS(backdoor_admissible(g, "X3", "X4", {"X3"}), Error);
    CHECK_THROWS_AS(backdoor_admissible(g, "X3", "X9", {}), Error);
}

TEST_CASE("minimal backdoor sets") {
    const Dag g = five_node();
    const auto sets = minimal_backdoor_sets(g, "X3", "X4");
    REQUIRE(sets.size() == 2);
    CHECK(sets[0] == std::set<std::string>{"X1"});
    CHECK(sets[1] == std::set<std::string>{"X2"});

    CHECK(minimal_backdoor_sets(chain4(), "X3", "X4") ==
          std::vector<std::set<std::string>>{{}});

    const Dag collider({"X1", "X2", "X3"}, {{"X1", "X3"}, {"X2", "X3"}});
    CHECK(minimal_backdoor_sets(collider, "X1", "X2") ==
          std::vector<std::set<std::string>>{{}});
}

TEST_CASE("minimal backdoor sets are admissible and inclusion-minimal") {
    const Dag g = five_node();
    for (const auto& [cause, effect] :
         std::vector<std::pair<std::string, std::string>>{{"X3", "X4"}, {"X2", "X4"},
                                                          {"X1", "X5"}, {"X2", "X5"}}) {
        for (const auto& s : minimal_backdoor_sets(g, cause, effect)) {
            CHECK(backdoor_admissible(g, cause, effect, s).admissible);
            for (const auto& drop : s) {
                std::set<std::string> smaller = s;
                smaller.erase(drop);
                CHECK_FALSE(backdoor_admissible(g, cause, effect, smaller).admissible);
            }
        }
    }
}

TEST_CASE("minimal backdoor sets reject oversized graphs") {
    std::vector<std::string> nodes;
    for (int i = 0; i < 21; ++i) nodes.push_back("N" + std::to_string(i));
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i + 1 < 21; ++i) edges.emplace_back(nodes[i], nodes[i + 1]);
    const Dag big(nodes, edges);
    try {
        minimal_backdoor_sets(big, "N0", "N20");
        FAIL("size cap not enforced");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::size_cap);
    }
}

TEST_CASE("linear sem construction validates its inputs") {
    Dag dag = chain4();
    CHECK_NOTHROW(chain_sem(1.0, 1.0));
    // missing coefficient
    CHECK_THROWS_AS(LinearSem(dag, {{{"X1", "X2"}, 1.0}}, {},
                              {{"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}, {"X4", 1.0}}),
                    Error);
    // coefficient on a non-edge
    CHECK_THROWS_AS(LinearSem(dag,
                              {{{"X1", "X2"}, 1.0},
                               {{"X2", "X3"}, 1.0},
                               {{"X3", "X4"}, 1.0},
                               {{"X1", "X4"}, 1.0}},
                              {}, {{"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}, {"X4", 1.0}}),
                    Error);
    // missing noise scale
    CHECK_THROWS_AS(LinearSem(dag,
                              {{{"X1", "X2"}, 1.0}, {{"X2", "X3"}, 1.0}, {{"X3", "X4"}, 1.0}},
                              {}, {{"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}}),
                    Error);
    // zero noise scale
    CHECK_THROWS_AS(LinearSem(dag,
                              {{{"X1", "X2"}, 1.0}, {{"X2", "X3"}, 1.0}, {{"X3", "X4"}, 1.0}},
                              {}, {{"X1", 0.0}, {"X2", 1.0}, {"X3", 1.0}, {"X4", 1.0}}),
                    Error);
    // intercept on an unknown node
    CHECK_THROWS_AS(LinearSem(dag,
                              {{{"X1", "X2"}, 1.0}, {{"X2", "X3"}, 1.0}, {{"X3", "X4"}, 1.0}},
                              {{"X9", 1.0}},
                              {{"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}, {"X4", 1.0}}),
                    Error);
}

TEST_CASE("simulation is deterministic in the seed") {
    const LinearSem sem = chain_sem(1.0, 1.0);
    const Dataset a = simulate(sem, 500, 42);
    const Dataset b = simulate(sem, 500, 42);
    CHECK(a.columns == b.columns);
    CHECK(a.values == b.values);
    const Dataset c = simulate(sem, 500, 43);
    CHECK(a.values != c.values);
    CHECK_THROWS_AS(simulate(sem, 0, 1), Error);
}

TEST_CASE("interventions are local surgeries") {
    const LinearSem sem = chain_sem(1.0, 1.0);
    const Dataset plain = simulate(sem, 400, 7);
    const Dataset cut = simulate(sem, 400, 7, Intervention{{{"X3", 2.0}}});
    // Upstream of the intervention the same noise stream produces the same
    // values bit for bit; the intervened column is constant; downstream moves.
    CHECK(plain.column("X1") == cut.column("X1"));
    CHECK(plain.column("X2") == cut.column("X2"));
    for (double v : cut.column("X3")) CHECK(v == 2.0);
    CHECK(plain.column("X4") != cut.column("X4"));
    CHECK_THROWS_AS(simulate(sem, 10, 7, Intervention{{{"X9", 0.0}}}), Error);
}

TEST_CASE("intervened chain mean matches the direct-effect slope") {
    const LinearSem sem = chain_sem(1.0, 1.0);
    const std::size_t n = 20000;
    const Dataset d2 = simulate(sem, n, 11, Intervention{{{"X3", 2.0}}});
    const auto& x4 = d2.column("X4");
    const double m = mean_of(x4);
    const double se = sd_of(x4) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(m - 2.0) < 3.0 * se);
}

TEST_CASE("observational chain mean multiplies the coefficients") {
    const LinearSem sem = chain_sem(2.0, 2.0);
    const std::size_t n = 20000;
    const Dataset d = simulate(sem, n, 5);
    const auto& x4 = d.column("X4");
    const double m = mean_of(x4);
    const double se = sd_of(x4) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(m - 16.0) < 3.0 * se);
}

TEST_CASE("ols recovers exact linear data") {
    Dataset data;
    data.columns = {"x", "y"};
    data.values.resize(2);
    for (int i = 0; i < 50; ++i) {
        const double x = 0.1 * i - 2.0;
        data.values[0].push_back(x);
        data.values[1].push_back(3.0 * x);
    }
    const OlsFit fit = ols_fit(data, "y", {"x"}, false);
    REQUIRE(fit.coefficients.size() == 1);
    CHECK(fit.coefficients[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.residual_variance == doctest::Approx(0.0).epsilon(1e-18));

    // With an intercept: y = 1 + 2x.
    Dataset aff = data;
    for (auto& y : aff.values[1]) y = 1.0 + 2.0 / 3.0 * y;  // 1 + 2x
    const OlsFit f2 = ols_fit(aff, "y", {"x"}, true);
    REQUIRE(f2.coefficients.size() == 2);
    CHECK(f2.names[0] == "(intercept)");
    CHECK(f2.coefficients[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(f2.coefficients[1] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("ols input validation") {
    Dataset data;
    data.columns = {"x", "y"};
    data.values = {{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(ols_fit(data, "z", {"x"}, false), Error);
    CHECK_THROWS_AS(ols_fit(data, "y", {"z"}, false), Error);
    CHECK_THROWS_AS(ols_fit(data, "y", {}, false), Error);
    // duplicated regressor column is collinear
    CHECK_THROWS_AS(ols_fit(data, "y", {"x", "x"}, false), Error);
    // more coefficients than rows
    Dataset tiny;
    tiny.columns = {"x", "y"};
    tiny.values = {{1.0}, {2.0}};
    CHECK_THROWS_AS(ols_fit(tiny, "y", {"x"}, false), Error);
}

TEST_CASE("omitted confounder biases the slope and adjustment removes it") {
    const LinearSem sem = confounded_sem();
    const std::size_t n = 20000;
    const Dataset d = simulate(sem, n, 99);

    const OlsFit naive = ols_fit(d, "X4", {"X3"}, true);
    const double slope_naive = naive.coefficients[1];
    const double se_naive = naive.standard_errors[1];
    CHECK(std::abs(slope_naive - 4.0 / 3.0) < 3.0 * se_naive);
    // The bias is real: 1/3 is many standard errors wide at this n.
    CHECK(slope_naive - 1.0 > 10.0 * se_naive);

    const OlsFit adjusted = ols_fit(d, "X4", {"X3", "X1"}, true);
    const double slope_adj = adjusted.coefficients[1];
    const double se_adj = adjusted.standard_errors[1];
    CHECK(std::abs(slope_adj - 1.0) < 3.0 * se_adj);

    // The backdoor machinery agrees that {X1} is a valid adjustment set.
    CHECK(backdoor_admissible(sem.dag(), "X3", "X4", {"X1"}).admissible);
    CHECK_FALSE(backdoor_admissible(sem.dag(), "X3", "X4", {}).admissible);
}

TEST_CASE("adjusted slope predicts intervention means") {
    const LinearSem sem = confounded_sem();
    const std::size_t n = 20000;
    const Dataset obs = simulate(sem, n, 3);
    const OlsFit adjusted = ols_fit(obs, "X4", {"X3", "X1"}, true);
    const double slope = adjusted.coefficients[1];

    const Dataset hi = simulate(sem, n, 4, Intervention{{{"X3", 2.0}}});
    const Dataset lo = simulate(sem, n, 5, Intervention{{{"X3", 0.0}}});
    const auto& x4h = hi.column("X4");
    const auto& x4l = lo.column("X4");
    const double diff = (mean_of(x4h) - mean_of(x4l)) / 2.0;
    const double se_diff = std::sqrt((sd_of(x4h) * sd_of(x4h) + sd_of(x4l) * sd_of(x4l)) /
                                     static_cast<double>(n)) /
                           2.0;
    const double se = std::sqrt(se_diff * se_diff +
                                adjusted.standard_errors[1] * adjusted.standard_errors[1]);
    CHECK(std::abs(slope - diff) < 3.0 * se);
}

TEST_CASE("csv export round-trips values and is rejected on bad paths") {
    Dataset data;
    data.columns = {"X1", "X2"};
    data.values = {{0.1, -2.5, 1.0 / 3.0}, {4.0, 5.5, -0.0625}};
    const auto path = std::filesystem::temp_directory_path() / "bias_design_test.csv";
    write_csv(data, path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "X1,X2");
    std::size_t rows = 0;
    std::vector<std::string> first_fields;
    while (std::getline(in, line)) {
        if (rows == 0) {
            std::stringstream ss(line);
            std::string field;
            while (std::getline(ss, field, ',')) first_fields.push_back(field);
        }
        ++rows;
    }
    CHECK(rows == 3);
    REQUIRE(first_fields.size() == 2);
    CHECK(std::stod(first_fields[0]) == 0.1);  // round-trip precision
    CHECK(std::stod(first_fields[1]) == 4.0);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(write_csv(data, "/nonexistent_dir_zzz/out.csv"), Error);
}
