// SPDX-License-Identifier: Apache-2.0
#include "shortdf/step_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "shortdf/rng.hpp"

namespace shortdf {

void StepGraph::add_node(int t, double d0) {
    if (t < 0) throw std::invalid_argument("StepGraph: negative timestep node");
    if (t == 0 && d0 != 0.0) {
        throw std::invalid_argument("StepGraph: node 0 is the clean-data terminal, dist0 must be 0");
    }
    if (!std::isfinite(d0)) throw std::invalid_argument("StepGraph: non-finite dist0");
    dist0[t] = d0;
}

void StepGraph::add_edge(int k, int t, double weight) {
    edges.push_back({k, t, weight});
}

void StepGraph::validate() const {
    for (const auto& [node, d0] : dist0) {
        if (node < 0 || !std::isfinite(d0)) {
            throw std::invalid_argument("StepGraph: invalid node entry");
        }
    }
    for (const auto& e : edges) {
        if (e.k >= e.t) {
            throw std::invalid_argument("StepGraph: edge requires k < t, got k=" +
                                        std::to_string(e.k) + " t=" + std::to_string(e.t));
        }
        if (!std::isfinite(e.weight)) throw std::invalid_argument("StepGraph: non-finite weight");
        if ((e.k != 0 && !dist0.count(e.k)) || !dist0.count(e.t)) {
            throw std::invalid_argument("StepGraph: edge references undeclared node");
        }
    }
}

namespace {

std::map<int, double> initial_distances(const StepGraph& g) {
    std::map<int, double> dist = g.dist0;
    dist[0] = 0.0;
    return dist;
}

}  // namespace

std::map<int, double> exact_shortest(const StepGraph& g) {
    g.validate();
    std::map<int, double> best = initial_distances(g);

    // incoming edges per target, consumed in ascending node order; sources are
    // always smaller so their values are final when the target is visited
    std::map<int, std::vector<const StepGraph::Edge*>> incoming;
    for (const auto& e : g.edges) incoming[e.t].push_back(&e);

    for (auto& [node, value] : best) {
        auto it = incoming.find(node);
        if (it == incoming.end()) continue;
        for (const auto* e : it->second) {
            const double via = best.at(e->k) + e->weight;
            if (via < value) value = via;
        }
    }
    return best;
}

RelaxationResult relaxation_fixpoint(const StepGraph& g, SweepOrder order, int max_sweeps,
                                     std::uint64_t seed) {
    g.validate();
    if (max_sweeps < 1) throw std::invalid_argument("relaxation_fixpoint: max_sweeps must be >= 1");

    RelaxationResult result;
    result.dist = initial_distances(g);

    std::vector<const StepGraph::Edge*> sweep;
    sweep.reserve(g.edges.size());
    for (const auto& e : g.edges) sweep.push_back(&e);
    if (order == SweepOrder::topological) {
        std::stable_sort(sweep.begin(), sweep.end(),
                         [](const auto* a, const auto* b) { return a->t < b->t; });
    }

    RngStream rng(seed, "relaxation-sweep");
    for (int s = 1; s <= max_sweeps; ++s) {
        if (order == SweepOrder::random) {
            // Fisher-Yates with the deterministic stream
            for (std::size_t i = sweep.size(); i > 1; --i) {
                std::size_t j = static_cast<std::size_t>(rng.next_below(i));
                std::swap(sweep[i - 1], sweep[j]);
            }
        }
        bool fired = false;
        for (const auto* e : sweep) {
            auto& dist_t = result.dist.at(e->t);
            const double via = result.dist.at(e->k) + e->weight;
            if (dist_t > via) {
                dist_t = via;
                fired = true;
            }
        }
        result.sweeps = s;
        if (!fired) {
            result.converged = true;
            break;
        }
    }
    return result;
}

StepGraph make_random_dag(int nodes, double edge_prob, double max_weight, double max_dist0,
                          std::uint64_t seed) {
    if (nodes < 1) throw std::invalid_argument("make_random_dag: need at least one node");
    RngStream rng(seed, "random-dag");

    StepGraph g;
    std::vector<int> ids;
    ids.reserve(nodes);
    int next = 0;
    for (int i = 0; i < nodes; ++i) {
        next += 1 + static_cast<int>(rng.next_below(3));
        ids.push_back(next);
        g.add_node(next, max_dist0 * rng.next_double());
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            if (rng.next_double() < edge_prob) {
                g.add_edge(ids[i], ids[j], (2.0 * rng.next_double() - 1.0) * max_weight);
            }
        }
    }
    return g;
}

StepGraph load_step_graph(std::istream& in) {
    StepGraph g;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;

        if (kind == "node") {
            int t;
            double d0;
            if (!(ls >> t >> d0)) {
                throw std::invalid_argument("step graph line " + std::to_string(lineno) +
                                            ": expected 'node <t> <dist0>'");
            }
            g.add_node(t, d0);
        } else if (kind == "edge") {
            int k, t;
            double w;
            if (!(ls >> k >> t >> w)) {
                throw std::invalid_argument("step graph line " + std::to_string(lineno) +
                                            ": expected 'edge <k> <t> <weight>'");
            }
            g.add_edge(k, t, w);
        } else {
            throw std::invalid_argument("step graph line " + std::to_string(lineno) +
                                        ": unknown record '" + kind + "'");
        }
    }
    g.validate();
    return g;
}

}  // namespace shortdf
