#include "refinery/model_profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "refinery/errors.hpp"

namespace refinery {

using json = nlohmann::json;

const LayerCut &ModelProfile::cut(int k) const {
    for (const auto &c : cuts) {
        if (c.k == k) return c;
    }
    throw Error(ErrorKind::InvariantViolation,
                "profile " + name + " has no cut k=" + std::to_string(k));
}

bool ModelProfile::has_cut(int k) const {
    return std::any_of(cuts.begin(), cuts.end(), [k](const LayerCut &c) { return c.k == k; });
}

double ModelProfile::full_client_density() const {
    double best = 0.0;
    for (const auto &c : cuts) best = std::max(best, c.client_density + c.server_density);
    return best;
}

namespace {

void validate_profile(const ModelProfile &p, const std::string &origin) {
    if (p.num_layers < 2) {
        throw Error(ErrorKind::InvariantViolation, origin + ": num_layers must be at least 2");
    }
    if (p.cuts.empty()) {
        throw Error(ErrorKind::InvariantViolation, origin + ": profile has no cuts");
    }
    if (!(p.model_size >= 0.0) || !std::isfinite(p.model_size)) {
        throw Error(ErrorKind::InvariantViolation, origin + ": model_size must be finite");
    }
    std::set<int> seen;
    for (const auto &c : p.cuts) {
        if (c.k <= 0 || c.k >= p.num_layers) {
            throw Error(ErrorKind::InvariantViolation,
                        origin + ": cut k=" + std::to_string(c.k) +
                            " outside 1..num_layers-1 (local training is not a cut)");
        }
        if (!seen.insert(c.k).second) {
            throw Error(ErrorKind::InvariantViolation,
                        origin + ": duplicate cut k=" + std::to_string(c.k));
        }
        for (double v : {c.client_density, c.server_density, c.exchange_size}) {
            if (v < 0.0 || !std::isfinite(v)) {
                throw Error(ErrorKind::InvariantViolation,
                            origin + ": cut k=" + std::to_string(c.k) +
                                " has a negative or non-finite field");
            }
        }
    }
}

}  // namespace

ModelProfile parse_profile_json(const std::string &text, const std::string &origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::ParseError, origin + ": " + e.what());
    }
    ModelProfile profile;
    try {
        profile.name = doc.at("name").get<std::string>();
        profile.num_layers = doc.at("num_layers").get<int>();
        profile.model_size = doc.at("model_size").get<double>();
        for (const auto &c : doc.at("cuts")) {
            LayerCut cut;
            cut.k = c.at("k").get<int>();
            cut.client_density = c.at("q_client").get<double>();
            cut.server_density = c.at("q_server").get<double>();
            cut.exchange_size = c.at("s_exchange").get<double>();
            profile.cuts.push_back(cut);
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, origin + ": " + e.what());
    }
    std::sort(profile.cuts.begin(), profile.cuts.end(),
              [](const LayerCut &a, const LayerCut &b) { return a.k < b.k; });
    validate_profile(profile, origin);
    return profile;
}

ModelProfile load_profile(const std::string &path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorKind::IoError, "cannot open profile file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_profile_json(buffer.str(), path);
}

std::vector<int> effective_partition_points(const ModelProfile &profile, double shrink_factor) {
    if (!(shrink_factor > 0.0 && shrink_factor <= 1.0)) {
        throw Error(ErrorKind::InvariantViolation, "shrink_factor must be in (0, 1]");
    }
    std::vector<int> selected;
    double min_previous = std::numeric_limits<double>::infinity();
    for (const auto &c : profile.cuts) {
        if (selected.empty() || c.exchange_size < shrink_factor * min_previous) {
            selected.push_back(c.k);
        }
        min_previous = std::min(min_previous, c.exchange_size);
    }
    return selected;
}

}  // namespace refinery
