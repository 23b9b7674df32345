#include "lineage/ordering.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include "lineage/errors.hpp"
#include "lineage/rng.hpp"

namespace lineage::ordering {

std::string_view to_string(Objective objective) {
    return objective == Objective::drift_agreement ? "drift-agreement" : "mutation-agreement";
}

std::optional<Objective> objective_from(std::string_view name) {
    if (name == "drift-agreement") return Objective::drift_agreement;
    if (name == "mutation-agreement") return Objective::mutation_agreement;
    return std::nullopt;
}

std::string_view to_string(TiePolicy policy) {
    return policy == TiePolicy::forward_for_neither ? "forward-for-neither" : "forward-when-source-first";
}

std::optional<TiePolicy> tie_policy_from(std::string_view name) {
    if (name == "forward-for-neither") return TiePolicy::forward_for_neither;
    if (name == "forward-when-source-first") return TiePolicy::forward_when_source_first;
    return std::nullopt;
}

namespace {

void check_permutation(const mutation::DriftGraph& graph, const std::vector<uint32_t>& permutation) {
    const std::size_t n = graph.values.size();
    if (permutation.size() != n)
        throw InvalidInputError("permutation covers " + std::to_string(permutation.size()) +
                                " values, graph has " + std::to_string(n));
    std::vector<bool> seen(n, false);
    for (uint32_t v : permutation) {
        if (v >= n || seen[v])
            throw InvalidInputError("permutation is not a bijection over the graph's values");
        seen[v] = true;
    }
}

/// The weight that pair (u placed before v) contributes to the objective.
std::vector<int64_t> objective_weights(const mutation::DriftGraph& graph, Objective objective,
                                       TiePolicy policy) {
    const std::size_t n = graph.values.size();
    std::vector<int64_t> w(n * n, 0);
    if (objective == Objective::mutation_agreement) {
        w = graph.traffic;
    } else {
        for (const mutation::DriftEdge& e : graph.edges) {
            if (e.tie && policy == TiePolicy::forward_for_neither) continue;
            w[e.source * n + e.target] = 1;
        }
    }
    return w;
}

int64_t forward_weight(const std::vector<int64_t>& w, std::size_t n,
                       const std::vector<uint32_t>& permutation) {
    int64_t total = 0;
    for (std::size_t i = 0; i < permutation.size(); ++i)
        for (std::size_t j = i + 1; j < permutation.size(); ++j)
            total += w[permutation[i] * n + permutation[j]];
    return total;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

OrderingResult finish(const mutation::DriftGraph& graph, std::vector<uint32_t> permutation,
                      Objective objective, TiePolicy policy, bool optimal, std::string solver,
                      Clock::time_point start) {
    OrderingResult r;
    r.scores = score_ordering(graph, permutation, policy);
    r.permutation = std::move(permutation);
    r.objective = objective;
    r.optimal = optimal;
    r.solver = std::move(solver);
    r.runtime_seconds = seconds_since(start);
    return r;
}

} // namespace

Scores score_ordering(const mutation::DriftGraph& graph, const std::vector<uint32_t>& permutation,
                      TiePolicy policy) {
    check_permutation(graph, permutation);
    const std::size_t n = graph.values.size();
    std::vector<uint32_t> position(n, 0);
    for (uint32_t i = 0; i < permutation.size(); ++i) position[permutation[i]] = i;

    Scores s;
    for (const mutation::DriftEdge& e : graph.edges) {
        ++s.scored_edges;
        bool forward = position[e.source] < position[e.target];
        if (e.tie) {
            if (policy == TiePolicy::forward_when_source_first && forward) ++s.forward_edges;
        } else if (forward) {
            ++s.forward_edges;
        }
    }
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j) {
            if (i == j) continue;
            int64_t c = graph.count(i, j);
            s.total_mass += c;
            if (position[i] < position[j]) s.forward_mass += c;
        }

    if (s.scored_edges > 0)
        s.drift_agreement = static_cast<double>(s.forward_edges) / static_cast<double>(s.scored_edges);
    if (s.total_mass > 0)
        s.mutation_agreement = static_cast<double>(s.forward_mass) / static_cast<double>(s.total_mass);
    return s;
}

OrderingResult solve_exact(const mutation::DriftGraph& graph, Objective objective,
                           std::size_t max_nodes, TiePolicy policy) {
    auto start = Clock::now();
    const std::size_t n = graph.values.size();
    if (n > max_nodes)
        throw TooLargeError("exact ordering solver capped at " + std::to_string(max_nodes) +
                            " values, graph has " + std::to_string(n) +
                            "; use the heuristic solver");

    if (n == 0) return finish(graph, {}, objective, policy, true, "exact-subset-dp", start);

    std::vector<int64_t> w = objective_weights(graph, objective, policy);

    // best[S] = max forward weight achievable within the value set S, via
    // "pick the first element of S" transitions.
    const std::size_t full = (std::size_t{1} << n) - 1;
    std::vector<int64_t> best(full + 1, 0);
    std::vector<uint32_t> members;
    for (std::size_t set = 1; set <= full; ++set) {
        members.clear();
        for (uint32_t v = 0; v < n; ++v)
            if (set >> v & 1) members.push_back(v);
        int64_t value = std::numeric_limits<int64_t>::min();
        for (uint32_t first : members) {
            int64_t cross = 0;
            for (uint32_t other : members)
                if (other != first) cross += w[first * n + other];
            value = std::max(value, cross + best[set & ~(std::size_t{1} << first)]);
        }
        best[set] = value;
    }

    // Rebuild front-to-back, preferring the smallest feasible value index so
    // equal-score permutations resolve to the lexicographically smallest one.
    std::vector<uint32_t> permutation;
    permutation.reserve(n);
    std::size_t set = full;
    while (set != 0) {
        for (uint32_t first = 0; first < n; ++first) {
            if (!(set >> first & 1)) continue;
            int64_t cross = 0;
            for (uint32_t other = 0; other < n; ++other)
                if (other != first && (set >> other & 1)) cross += w[first * n + other];
            if (cross + best[set & ~(std::size_t{1} << first)] == best[set]) {
                permutation.push_back(first);
                set &= ~(std::size_t{1} << first);
                break;
            }
        }
    }
    return finish(graph, std::move(permutation), objective, policy, true, "exact-subset-dp", start);
}

namespace {

/// Greedy construction: repeatedly peel weighted sinks to the back and
/// weighted sources to the front, otherwise move the best net-outflow value
/// to the front. Reproduces a topological order whenever the weights are
/// acyclic.
std::vector<uint32_t> construct_order(const std::vector<int64_t>& w, std::size_t n) {
    std::vector<bool> remaining(n, true);
    std::vector<uint32_t> front, back;
    std::size_t left = n;
    auto out_in = [&](uint32_t v) {
        int64_t out = 0, in = 0;
        for (uint32_t u = 0; u < n; ++u) {
            if (!remaining[u] || u == v) continue;
            out += w[v * n + u];
            in += w[u * n + v];
        }
        return std::make_pair(out, in);
    };
    while (left > 0) {
        bool removed = true;
        while (removed && left > 0) {
            removed = false;
            for (uint32_t v = 0; v < n && !removed; ++v) {
                if (!remaining[v]) continue;
                auto [out, in] = out_in(v);
                if (out == 0 && in > 0) { // pure sink
                    back.push_back(v);
                    remaining[v] = false;
                    --left;
                    removed = true;
                }
            }
            for (uint32_t v = 0; v < n && !removed; ++v) {
                if (!remaining[v]) continue;
                auto [out, in] = out_in(v);
                if (in == 0) { // source (or isolated)
                    front.push_back(v);
                    remaining[v] = false;
                    --left;
                    removed = true;
                }
            }
        }
        if (left == 0) break;
        uint32_t pick = 0;
        int64_t best_net = std::numeric_limits<int64_t>::min();
        for (uint32_t v = 0; v < n; ++v) {
            if (!remaining[v]) continue;
            auto [out, in] = out_in(v);
            if (out - in > best_net) {
                best_net = out - in;
                pick = v;
            }
        }
        front.push_back(pick);
        remaining[pick] = false;
        --left;
    }
    front.insert(front.end(), back.rbegin(), back.rend());
    return front;
}

/// First-improvement passes of adjacent swaps then single-node relocations,
/// until a full sweep finds nothing.
void local_search(const std::vector<int64_t>& w, std::size_t n, std::vector<uint32_t>& order) {
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            uint32_t a = order[i], b = order[i + 1];
            if (w[b * n + a] > w[a * n + b]) {
                std::swap(order[i], order[i + 1]);
                improved = true;
            }
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            uint32_t v = order[i];
            // delta of moving v from i to j accumulates edge reversals with
            // everything it passes over
            int64_t delta = 0;
            int64_t best_delta = 0;
            std::size_t best_j = i;
            for (std::size_t j = i; j + 1 < order.size(); ++j) { // shift right
                uint32_t over = order[j + 1];
                delta += w[over * n + v] - w[v * n + over];
                if (delta > best_delta) {
                    best_delta = delta;
                    best_j = j + 1;
                }
            }
            delta = 0;
            for (std::size_t j = i; j > 0; --j) { // shift left
                uint32_t over = order[j - 1];
                delta += w[v * n + over] - w[over * n + v];
                if (delta > best_delta) {
                    best_delta = delta;
                    best_j = j - 1;
                }
            }
            if (best_j != i) {
                order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
                order.insert(order.begin() + static_cast<std::ptrdiff_t>(best_j), v);
                improved = true;
            }
        }
    }
}

} // namespace

OrderingResult solve_heuristic(const mutation::DriftGraph& graph, Objective objective,
                               uint64_t seed, TiePolicy policy, std::size_t restarts) {
    auto start = Clock::now();
    const std::size_t n = graph.values.size();
    if (n == 0) return finish(graph, {}, objective, policy, false, "greedy-local-search", start);

    std::vector<int64_t> w = objective_weights(graph, objective, policy);

    std::vector<uint32_t> best_order;
    int64_t best_score = std::numeric_limits<int64_t>::min();
    for (std::size_t r = 0; r <= restarts; ++r) {
        std::vector<uint32_t> order;
        if (r == 0) {
            order = construct_order(w, n);
        } else {
            order.resize(n);
            std::iota(order.begin(), order.end(), 0);
            RandomStream stream = RandomStream::substream(seed, r);
            for (std::size_t i = n - 1; i > 0; --i)
                std::swap(order[i], order[stream.uniform(i + 1)]);
        }
        local_search(w, n, order);
        int64_t score = forward_weight(w, n, order);
        if (score > best_score || (score == best_score && order < best_order)) {
            best_score = score;
            best_order = std::move(order);
        }
    }
    return finish(graph, std::move(best_order), objective, policy, false, "greedy-local-search",
                  start);
}

} // namespace lineage::ordering
