#include "refinery/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>

#include "json.hpp"
#include "refinery/errors.hpp"

namespace refinery {

using json = nlohmann::json;

NodeKind node_kind_from_string(const std::string &s) {
    if (s == "client") return NodeKind::Client;
    if (s == "router") return NodeKind::Router;
    if (s == "site") return NodeKind::Site;
    throw Error(ErrorKind::ParseError, "unknown node kind: " + s);
}

std::string to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Client: return "client";
        case NodeKind::Router: return "router";
        case NodeKind::Site: return "site";
    }
    return "?";
}

int Topology::node_index(std::string_view id) const {
    auto it = node_by_id_.find(id);
    return it == node_by_id_.end() ? -1 : it->second;
}

std::vector<int> Topology::nodes_of_kind(NodeKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < num_nodes(); ++i) {
        if (nodes_[static_cast<size_t>(i)].kind == kind) out.push_back(i);
    }
    return out;
}

Topology build_topology(const std::vector<NodeSpec> &node_specs,
                        const std::vector<LinkSpec> &link_specs) {
    Topology topo;
    for (const auto &spec : node_specs) {
        if (topo.node_by_id_.count(spec.id)) {
            throw Error(ErrorKind::DuplicateId, "duplicate node id: " + spec.id);
        }
        topo.node_by_id_[spec.id] = static_cast<int>(topo.nodes_.size());
        topo.nodes_.push_back({spec.id, spec.kind});
    }
    topo.outgoing_.resize(topo.nodes_.size());

    std::set<std::string> link_ids;
    for (const auto &spec : link_specs) {
        if (!link_ids.insert(spec.id).second) {
            throw Error(ErrorKind::DuplicateId, "duplicate link id: " + spec.id);
        }
        int src = topo.node_index(spec.src);
        int dst = topo.node_index(spec.dst);
        if (src < 0) {
            throw Error(ErrorKind::DanglingEndpoint,
                        "link " + spec.id + " references unknown node " + spec.src);
        }
        if (dst < 0) {
            throw Error(ErrorKind::DanglingEndpoint,
                        "link " + spec.id + " references unknown node " + spec.dst);
        }
        if (src == dst) {
            throw Error(ErrorKind::InvariantViolation, "link " + spec.id + " is a self loop");
        }
        if (!(spec.capacity > 0.0) || !std::isfinite(spec.capacity)) {
            throw Error(ErrorKind::InvariantViolation,
                        "link " + spec.id + " needs a finite positive capacity");
        }
        if (spec.cost < 0.0 || !std::isfinite(spec.cost)) {
            throw Error(ErrorKind::InvariantViolation,
                        "link " + spec.id + " needs a finite non-negative cost");
        }
        int group = topo.num_groups_++;
        topo.group_capacity_.push_back(spec.capacity);
        topo.group_cost_.push_back(spec.cost);

        auto add_arc = [&](int a, int b) {
            int idx = static_cast<int>(topo.links_.size());
            topo.links_.push_back({spec.id, a, b, spec.capacity, spec.cost, group});
            topo.outgoing_[static_cast<size_t>(a)].push_back(idx);
        };
        add_arc(src, dst);
        if (spec.undirected) add_arc(dst, src);
    }
    return topo;
}

Topology load_topology(const std::string &path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorKind::IoError, "cannot open topology file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ParseError, "topology " + path + ": " + e.what());
    }
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    try {
        for (const auto &n : doc.at("nodes")) {
            nodes.push_back({n.at("id").get<std::string>(),
                             node_kind_from_string(n.at("kind").get<std::string>())});
        }
        for (const auto &l : doc.at("links")) {
            LinkSpec spec;
            spec.id = l.at("id").get<std::string>();
            spec.src = l.at("src").get<std::string>();
            spec.dst = l.at("dst").get<std::string>();
            spec.capacity = l.at("capacity").get<double>();
            spec.cost = l.at("cost").get<double>();
            spec.undirected = l.value("undirected", true);
            links.push_back(spec);
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, "topology " + path + ": " + e.what());
    }
    return build_topology(nodes, links);
}

namespace {

// Candidate walk used during search; ordered by (hops, link-id sequence).
struct SearchPath {
    std::vector<int> links;
    int end = -1;
};

bool id_sequence_less(const Topology &topo, const std::vector<int> &a,
                      const std::vector<int> &b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        const std::string &ia = topo.link(a[i]).id;
        const std::string &ib = topo.link(b[i]).id;
        if (ia != ib) return ia < ib;
        // Same physical link id can cover both directions; fall back to the
        // arc index so the order stays total.
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return a.size() < b.size();
}

bool path_less(const Topology &topo, const std::vector<int> &a, const std::vector<int> &b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return id_sequence_less(topo, a, b);
}

/// Shortest (fewest hops, then lexicographically smallest) loopless path from
/// src to dst that avoids the banned arcs and nodes. Empty result when
/// unreachable.
std::vector<int> constrained_shortest_path(const Topology &topo, int src, int dst,
                                           const std::vector<bool> &banned_link,
                                           const std::vector<bool> &banned_node) {
    auto cmp = [&](const SearchPath &a, const SearchPath &b) {
        return path_less(topo, b.links, a.links);  // min-heap
    };
    std::priority_queue<SearchPath, std::vector<SearchPath>, decltype(cmp)> queue(cmp);
    queue.push({{}, src});
    std::vector<bool> done(static_cast<size_t>(topo.num_nodes()), false);
    while (!queue.empty()) {
        SearchPath cur = queue.top();
        queue.pop();
        if (done[static_cast<size_t>(cur.end)]) continue;
        done[static_cast<size_t>(cur.end)] = true;
        if (cur.end == dst) return cur.links;
        for (int arc : topo.outgoing(cur.end)) {
            if (banned_link[static_cast<size_t>(arc)]) continue;
            int next = topo.link(arc).dst;
            if (banned_node[static_cast<size_t>(next)] || done[static_cast<size_t>(next)]) continue;
            SearchPath ext = cur;
            ext.links.push_back(arc);
            ext.end = next;
            queue.push(std::move(ext));
        }
    }
    return {};
}

}  // namespace

std::vector<Path> enumerate_paths(const Topology &topo, int client, int site, int k_paths) {
    std::vector<std::vector<int>> found;
    std::vector<bool> no_banned_link(static_cast<size_t>(topo.num_links()), false);
    std::vector<bool> no_banned_node(static_cast<size_t>(topo.num_nodes()), false);

    std::vector<int> first =
        constrained_shortest_path(topo, client, site, no_banned_link, no_banned_node);
    if (first.empty()) return {};
    found.push_back(first);

    // Yen spur candidates, kept ordered and de-duplicated.
    auto cand_cmp = [&](const std::vector<int> &a, const std::vector<int> &b) {
        return path_less(topo, a, b);
    };
    std::set<std::vector<int>, decltype(cand_cmp)> candidates(cand_cmp);

    while (static_cast<int>(found.size()) < k_paths) {
        const std::vector<int> &prev = found.back();
        for (size_t spur = 0; spur < prev.size(); ++spur) {
            std::vector<int> root(prev.begin(), prev.begin() + static_cast<long>(spur));
            int spur_node = spur == 0 ? client : topo.link(prev[spur - 1]).dst;

            std::vector<bool> banned_link(static_cast<size_t>(topo.num_links()), false);
            std::vector<bool> banned_node(static_cast<size_t>(topo.num_nodes()), false);
            for (const auto &p : found) {
                if (p.size() > spur &&
                    std::equal(root.begin(), root.end(), p.begin())) {
                    banned_link[static_cast<size_t>(p[spur])] = true;
                }
            }
            // Root nodes other than the spur node must not reappear.
            if (client != spur_node) banned_node[static_cast<size_t>(client)] = true;
            for (int arc : root) {
                int mid = topo.link(arc).dst;
                if (mid != spur_node) banned_node[static_cast<size_t>(mid)] = true;
            }

            std::vector<int> spur_path =
                constrained_shortest_path(topo, spur_node, site, banned_link, banned_node);
            if (spur_path.empty()) continue;
            std::vector<int> total = root;
            total.insert(total.end(), spur_path.begin(), spur_path.end());
            bool known = std::find(found.begin(), found.end(), total) != found.end();
            if (!known) candidates.insert(total);
        }
        if (candidates.empty()) break;
        found.push_back(*candidates.begin());
        candidates.erase(candidates.begin());
    }

    std::vector<Path> out;
    out.reserve(found.size());
    for (size_t i = 0; i < found.size(); ++i) {
        out.push_back({client, site, found[i], static_cast<int>(i)});
    }
    return out;
}

int link_indicator(const Topology &topo, const Path &path, std::string_view link_id) {
    for (int arc : path.links) {
        if (topo.link(arc).id == link_id) return 1;
    }
    return 0;
}

PathSet::PathSet(const Topology &topo, int k_paths) : k_paths_(k_paths) {
    std::vector<int> clients = topo.nodes_of_kind(NodeKind::Client);
    std::vector<int> sites = topo.nodes_of_kind(NodeKind::Site);
    for (int c : clients) {
        for (int s : sites) {
            paths_[{c, s}] = enumerate_paths(topo, c, s, k_paths);
        }
    }
}

const std::vector<Path> &PathSet::paths(int client, int site) const {
    auto it = paths_.find({client, site});
    return it == paths_.end() ? empty_ : it->second;
}

}  // namespace refinery
