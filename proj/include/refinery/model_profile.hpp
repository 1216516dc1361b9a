#pragma once

#include <string>
#include <vector>

namespace refinery {

/// Per-cut compute densities and exchanged data volume, all per training batch.
struct LayerCut {
    int k = 0;
    double client_density = 0.0;
    double server_density = 0.0;
    double exchange_size = 0.0;
};

struct ModelProfile {
    std::string name;
    int num_layers = 0;
    double model_size = 0.0;
    std::vector<LayerCut> cuts;  // ascending k, each in 1..num_layers-1

    const LayerCut &cut(int k) const;
    bool has_cut(int k) const;

    /// Compute density of training the whole model on the client, used by the
    /// local-training baseline. Cut densities split one total, so the sum is
    /// (close to) constant across cuts; the maximum is a safe upper bound.
    double full_client_density() const;
};

ModelProfile load_profile(const std::string &path);
ModelProfile parse_profile_json(const std::string &text, const std::string &origin);

/// Scans cuts in ascending k. The first cut is always kept; a later cut
/// survives only if its exchange size is strictly below shrink_factor times
/// the smallest exchange size among all earlier cuts.
std::vector<int> effective_partition_points(const ModelProfile &profile,
                                            double shrink_factor = 1.0);

}  // namespace refinery
