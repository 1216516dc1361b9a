#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace refinery {

enum class NodeKind { Client, Router, Site };

NodeKind node_kind_from_string(const std::string &s);
std::string to_string(NodeKind kind);

struct NodeSpec {
    std::string id;
    NodeKind kind = NodeKind::Router;
};

struct LinkSpec {
    std::string id;
    std::string src;
    std::string dst;
    double capacity = 0.0;
    double cost = 0.0;
    bool undirected = true;
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Router;
};

/// One directed arc. An undirected physical link is stored as two directed
/// arcs that share the same id and capacity group, so per-link bandwidth is
/// budgeted once regardless of traversal direction.
struct Link {
    std::string id;
    int src = -1;
    int dst = -1;
    double bandwidth_capacity = 0.0;
    double unit_bandwidth_cost = 0.0;
    int group = -1;
};

class Topology {
  public:
    Topology() = default;

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_links() const { return static_cast<int>(links_.size()); }
    int num_groups() const { return num_groups_; }

    const Node &node(int index) const { return nodes_[static_cast<size_t>(index)]; }
    const Link &link(int index) const { return links_[static_cast<size_t>(index)]; }

    /// -1 when the id is unknown.
    int node_index(std::string_view id) const;

    const std::vector<int> &outgoing(int node) const {
        return outgoing_[static_cast<size_t>(node)];
    }

    double group_capacity(int group) const { return group_capacity_[static_cast<size_t>(group)]; }
    double group_cost(int group) const { return group_cost_[static_cast<size_t>(group)]; }

    std::vector<int> nodes_of_kind(NodeKind kind) const;

    friend Topology build_topology(const std::vector<NodeSpec> &node_specs,
                                   const std::vector<LinkSpec> &link_specs);

  private:
    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<std::vector<int>> outgoing_;
    std::map<std::string, int, std::less<>> node_by_id_;
    std::vector<double> group_capacity_;
    std::vector<double> group_cost_;
    int num_groups_ = 0;
};

Topology build_topology(const std::vector<NodeSpec> &node_specs,
                        const std::vector<LinkSpec> &link_specs);

/// Reads {nodes: [{id, kind}], links: [{id, src, dst, capacity, cost, undirected}]}.
Topology load_topology(const std::string &path);

/// A loopless walk from a client node to a site node, stored as directed link
/// indices. `index` is the position of this path in its (client, site) list.
struct Path {
    int client = -1;
    int site = -1;
    std::vector<int> links;
    int index = -1;
};

/// Up to k_paths loopless paths ordered by hop count, ties broken by the
/// lexicographic order of the traversed link-id sequences. Unreachable pairs
/// yield an empty list.
std::vector<Path> enumerate_paths(const Topology &topo, int client, int site, int k_paths);

int link_indicator(const Topology &topo, const Path &path, std::string_view link_id);

class PathSet {
  public:
    PathSet() = default;
    PathSet(const Topology &topo, int k_paths);

    const std::vector<Path> &paths(int client, int site) const;
    int k_paths() const { return k_paths_; }

  private:
    std::map<std::pair<int, int>, std::vector<Path>> paths_;
    std::vector<Path> empty_;
    int k_paths_ = 0;
};

}  // namespace refinery
