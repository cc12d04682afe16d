// SPDX-License-Identifier: Apache-2.0
#ifndef SHORTDF_STEP_GRAPH_HPP
#define SHORTDF_STEP_GRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

namespace shortdf {

// Explicit weighted graph over timesteps. Edges point from a smaller step k to
// a larger step t, so the graph is a DAG and shortest distances are well
// defined even with signed weights. dist0 holds each node's one-jump error to
// clean data; node 0 is always present with dist0 == 0.
struct StepGraph {
    struct Edge {
        int k = 0;
        int t = 0;
        double weight = 0.0;
    };

    std::map<int, double> dist0;
    std::vector<Edge> edges;

    void add_node(int t, double d0);
    void add_edge(int k, int t, double weight);
    void validate() const;  // throws std::invalid_argument on violation
};

// Ground truth: for each node, the minimum over all descending chains of
// (traversed edge weights + the final node's dist0), by dynamic programming in
// ascending node order.
std::map<int, double> exact_shortest(const StepGraph& g);

enum class SweepOrder { random, topological };

struct RelaxationResult {
    std::map<int, double> dist;
    int sweeps = 0;
    bool converged = false;
};

// Iterative relaxation: repeatedly tests dist(t) > dist(k) + edge(k,t) over
// all edges and updates until a full sweep fires no update. Topological order
// (edges sorted by target) settles in one sweep on any DAG; random order may
// need several.
RelaxationResult relaxation_fixpoint(const StepGraph& g, SweepOrder order, int max_sweeps,
                                     std::uint64_t seed = 0);

// Flat text format: one `node <t> <dist0>` or `edge <k> <t> <weight>` per
// line; blank lines and `#` comments ignored.
StepGraph load_step_graph(std::istream& in);

// Random DAG over `nodes` distinct positive timesteps: each admissible (k, t)
// pair carries an edge with probability edge_prob, weights uniform in
// [-max_weight, max_weight], dist0 uniform in [0, max_dist0].
StepGraph make_random_dag(int nodes, double edge_prob, double max_weight, double max_dist0,
                          std::uint64_t seed);

}  // namespace shortdf

#endif
